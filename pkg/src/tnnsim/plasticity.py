"""STDP / R-STDP update logic.

Each synapse draws a fixed set of five LFSR words per update, whatever its
case: the capture, backoff, search and min gates, then the stabilisation
gate F(w). Keeping the schedule fixed lets the cycle-accurate and functional
column engines consume identical randomness.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .temporal import ABSENT, W_MAX, LfsrBank, RandomSource, bernoulli, bernoulli_threshold, lfsr_next


@dataclass(frozen=True)
class PlasticityParams:
    mu_capture: float = 0.6
    mu_backoff: float = 0.5
    mu_search: float = 0.02
    mu_min: float = 0.006

    def __post_init__(self):
        for name in ("mu_capture", "mu_backoff", "mu_search", "mu_min"):
            mu = getattr(self, name)
            if not 0.0 <= mu <= 1.0:
                raise ValueError(f"{name}={mu} outside [0, 1]")

    @classmethod
    def frozen(cls) -> "PlasticityParams":
        return cls(0.0, 0.0, 0.0, 0.0)


class StdpCase(enum.IntEnum):
    CAPTURE = 1
    BACKOFF = 2
    SEARCH = 3
    ABSENT_INPUT = 4
    IDLE = 5


class Reward(enum.Enum):
    PLUS = 0b01
    MINUS = 0b11
    ZERO = 0b00
    UNSUPERVISED = 0b10

    @property
    def bits(self) -> str:
        return format(self.value, "02b")


def classify_case(x: int, z: int) -> StdpCase:
    x_on, z_on = x != ABSENT, z != ABSENT
    if x_on and z_on:
        return StdpCase.CAPTURE if x <= z else StdpCase.BACKOFF
    if x_on:
        return StdpCase.SEARCH
    if z_on:
        return StdpCase.ABSENT_INPUT
    return StdpCase.IDLE


def stabilization_prob(w: int) -> float:
    return (w / W_MAX) * (1 - w / W_MAX)


def stabilization_thresholds(width: int) -> np.ndarray:
    """Threshold per weight value: the BRV bank the 8-to-1 mux selects from."""
    return np.array([bernoulli_threshold(stabilization_prob(w), width) for w in range(W_MAX + 1)], dtype=np.uint64)


def stabilization_bit(w: int, rng: RandomSource) -> tuple[int, RandomSource]:
    if not 0 <= w <= W_MAX:
        raise ValueError(f"weight {w} outside 0..{W_MAX}")
    word, rng = lfsr_next(rng)
    bank = stabilization_thresholds(rng.width)
    return int(word < int(bank[w])), rng


class Gates(NamedTuple):
    capture: int
    backoff: int
    search: int
    floor: int
    stab: int


def draw_gates(w: int, params: PlasticityParams, rng: RandomSource) -> tuple[Gates, RandomSource]:
    capture, rng = bernoulli(rng, params.mu_capture)
    backoff, rng = bernoulli(rng, params.mu_backoff)
    search, rng = bernoulli(rng, params.mu_search)
    floor, rng = bernoulli(rng, params.mu_min)
    stab, rng = stabilization_bit(w, rng)
    return Gates(capture, backoff, search, floor, stab), rng


def _table_delta(case: StdpCase, g: Gates) -> int:
    sticky = g.stab | g.floor  # max(F(w), B(mu_min)) on single bits
    if case is StdpCase.CAPTURE:
        return g.capture & sticky
    if case in (StdpCase.BACKOFF, StdpCase.ABSENT_INPUT):
        return -(g.backoff & sticky)
    if case is StdpCase.SEARCH:
        return g.search
    return 0


def _reward_delta(case: StdpCase, g: Gates, reward: Reward) -> int:
    if reward is Reward.UNSUPERVISED:
        return _table_delta(case, g)
    if reward is Reward.PLUS:
        return 0 if case is StdpCase.SEARCH else _table_delta(case, g)
    if reward is Reward.MINUS:
        if case is StdpCase.CAPTURE:
            return -_table_delta(case, g)
        if case is StdpCase.SEARCH:
            return _table_delta(case, g)
        return 0
    # ZERO: only the search case acts
    return _table_delta(case, g) if case is StdpCase.SEARCH else 0


def stdp_delta(case: StdpCase, w: int, params: PlasticityParams, rng: RandomSource) -> tuple[int, RandomSource]:
    gates, rng = draw_gates(w, params, rng)
    return _table_delta(case, gates), rng


def rstdp_delta(case: StdpCase, w: int, reward: Reward, params: PlasticityParams, rng: RandomSource) -> tuple[int, RandomSource]:
    gates, rng = draw_gates(w, params, rng)
    return _reward_delta(case, gates, reward), rng


def compute_reward(winner: int | None, label: int, mapping=None, q: int | None = None) -> Reward:
    """Reward for one gamma cycle given the column's winner and the true label.

    ``mapping`` sends labels to neuron indices; identity when omitted (then
    ``q``, if given, bounds the valid labels).
    """
    if mapping is None:
        if label < 0 or (q is not None and label >= q):
            raise ValueError(f"label {label} has no neuron mapped to it")
        target = label
    else:
        if label not in mapping:
            raise ValueError(f"label {label} has no neuron mapped to it")
        target = mapping[label]
    if winner is None:
        return Reward.ZERO
    return Reward.PLUS if winner == target else Reward.MINUS


# -- array form used by the column engines --------------------------------

def classify_cases(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """p x q case matrix for input times ``x`` (p,) and output times ``z`` (q,)."""
    xs = np.asarray(x)[:, None]
    zs = np.asarray(z)[None, :]
    x_on = xs != ABSENT
    z_on = zs != ABSENT
    cases = np.full(np.broadcast_shapes(xs.shape, zs.shape), int(StdpCase.IDLE), dtype=np.int8)
    cases[x_on & ~z_on] = StdpCase.SEARCH
    cases[~x_on & z_on] = StdpCase.ABSENT_INPUT
    both = x_on & z_on
    cases[both & (xs <= zs)] = StdpCase.CAPTURE
    cases[both & (xs > zs)] = StdpCase.BACKOFF
    return cases


def weight_deltas(weights: np.ndarray, cases: np.ndarray, reward: Reward,
                  params: PlasticityParams, bank: LfsrBank) -> np.ndarray:
    """Draw gates for every synapse and return the p x q delta matrix.

    ``bank`` may hold one stream per synapse or a single broadcast stream
    (shared-LFSR mode).
    """
    capture = bank.bernoulli(params.mu_capture)
    backoff = bank.bernoulli(params.mu_backoff)
    search = bank.bernoulli(params.mu_search)
    floor = bank.bernoulli(params.mu_min)
    stab_words = bank.next_words()
    stab = stab_words < stabilization_thresholds(bank.width)[weights]
    sticky = stab | floor

    inc_capture = (capture & sticky).astype(np.int8)
    dec_backoff = (backoff & sticky).astype(np.int8)
    search = np.broadcast_to(search, weights.shape).astype(np.int8)
    inc_capture = np.broadcast_to(inc_capture, weights.shape)
    dec_backoff = np.broadcast_to(dec_backoff, weights.shape)

    delta = np.zeros(weights.shape, dtype=np.int8)
    is_capture = cases == StdpCase.CAPTURE
    is_search = cases == StdpCase.SEARCH
    is_backoff = (cases == StdpCase.BACKOFF) | (cases == StdpCase.ABSENT_INPUT)

    if reward is Reward.UNSUPERVISED or reward is Reward.PLUS:
        delta[is_capture] = inc_capture[is_capture]
        delta[is_backoff] = -dec_backoff[is_backoff]
        if reward is Reward.UNSUPERVISED:
            delta[is_search] = search[is_search]
    elif reward is Reward.MINUS:
        delta[is_capture] = -inc_capture[is_capture]
        delta[is_search] = search[is_search]
    else:
        delta[is_search] = search[is_search]
    return delta


def apply_deltas(weights: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    return np.clip(weights + deltas, 0, W_MAX).astype(weights.dtype)
