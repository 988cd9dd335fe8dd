"""Spike times, the gamma-cycle schedule and LFSR-backed Bernoulli sources."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

W_MAX = 7
WEIGHT_BITS = math.ceil(math.log2(W_MAX + 1))
PULSE_WIDTH = W_MAX + 1
GAMMA = 15

# Spike times are small ints; ABSENT stands in for "no spike" (infinity) and
# compares greater than every real time.
ABSENT = 255
SPIKE_DTYPE = np.int16


@dataclass(frozen=True)
class ArchParams:
    w_max: int = W_MAX

    @property
    def weight_bits(self) -> int:
        return math.ceil(math.log2(self.w_max + 1))

    @property
    def pulse_width(self) -> int:
        return self.w_max + 1

    @property
    def gamma(self) -> int:
        # encoding window + readout tail + update cycle
        return self.w_max + self.w_max + 1


def is_present(t) -> bool:
    return t != ABSENT


def check_spike_time(t: int, w_max: int = W_MAX) -> int:
    if t != ABSENT and not 0 <= t <= w_max:
        raise ValueError(f"spike time {t} outside 0..{w_max}")
    return t


def as_volley(times, w_max: int = W_MAX) -> np.ndarray:
    """Validate and pack a sequence of spike times into a volley array.

    ``None`` is accepted as an alias for ABSENT.
    """
    vals = [ABSENT if t is None else int(t) for t in times]
    for t in vals:
        check_spike_time(t, w_max)
    return np.asarray(vals, dtype=SPIKE_DTYPE)


class GammaPhase(enum.Enum):
    INPUT_WINDOW = "input_window"
    TAIL = "tail"
    UPDATE = "update"


def gamma_phase(cycle: int) -> GammaPhase:
    if not 0 <= cycle < GAMMA:
        raise ValueError(f"cycle {cycle} outside 0..{GAMMA - 1}")
    if cycle < W_MAX:
        return GammaPhase.INPUT_WINDOW
    if cycle < 2 * W_MAX:
        return GammaPhase.TAIL
    return GammaPhase.UPDATE


# Maximal-length Fibonacci taps (1-indexed register positions).
MAXIMAL_TAPS = {
    8: (8, 6, 5, 4),
    16: (16, 14, 13, 11),
    24: (24, 23, 22, 17),
    32: (32, 22, 2, 1),
}


def _shift(state, width: int, taps):
    """One Fibonacci shift; works on Python ints and numpy uint arrays alike."""
    fb = 0
    for t in taps:
        fb = fb ^ (state >> (width - t))
    fb = fb & 1
    return (state >> 1) | (fb << (width - 1))


@dataclass(frozen=True)
class RandomSource:
    """A Fibonacci LFSR that yields one ``width``-bit word per draw.

    Every draw shifts the register ``width`` times so consecutive words do
    not share bits. Because gcd(width, 2**width - 1) = 1 the word sequence
    still has the full period 2**width - 1.
    """

    state: int
    width: int = 16
    taps: tuple = MAXIMAL_TAPS[16]

    def __post_init__(self):
        if not 0 < self.state < (1 << self.width):
            raise ValueError(f"LFSR seed must be a nonzero {self.width}-bit word, got {self.state}")
        if max(self.taps) != self.width:
            raise ValueError("highest tap must equal the register width")

    @classmethod
    def seeded(cls, seed: int, width: int = 16) -> "RandomSource":
        if width not in MAXIMAL_TAPS:
            raise ValueError(f"no maximal taps known for width {width}")
        return cls(state=seed, width=width, taps=MAXIMAL_TAPS[width])


def lfsr_next(source: RandomSource) -> tuple[int, RandomSource]:
    word = source.state
    state = word
    for _ in range(source.width):
        state = _shift(state, source.width, source.taps)
    return word, replace(source, state=state)


def bernoulli_threshold(mu: float, width: int) -> int:
    """Integer threshold so that ``word < threshold`` has probability ~mu."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"probability {mu} outside [0, 1]")
    return math.ceil(mu * (1 << width))


def bernoulli(source: RandomSource, mu: float) -> tuple[int, RandomSource]:
    threshold = bernoulli_threshold(mu, source.width)
    word, source = lfsr_next(source)
    return int(word < threshold), source


def _jump_tables(width: int, taps) -> list[np.ndarray]:
    # The width-fold shift is linear over GF(2), so the advanced state is the
    # XOR of per-byte contributions. One 256-entry table per input byte.
    nbytes = (width + 7) // 8
    tables = []
    for b in range(nbytes):
        vals = np.arange(256, dtype=np.uint64) << np.uint64(8 * b)
        vals &= np.uint64((1 << width) - 1)
        state = vals
        for _ in range(width):
            state = _shift(state, width, taps)
        tables.append(state.astype(np.uint64))
    return tables


_TABLE_CACHE: dict = {}


class LfsrBank:
    """Many independent LFSR streams stepped together (one per synapse).

    Stepping is bit-exact with :func:`lfsr_next` on each element.
    """

    def __init__(self, states, width: int = 16, taps=None):
        taps = tuple(taps or MAXIMAL_TAPS[width])
        states = np.asarray(states, dtype=np.uint64)
        if np.any(states == 0) or np.any(states >= (1 << width)):
            raise ValueError(f"LFSR seeds must be nonzero {width}-bit words")
        self.width = width
        self.taps = taps
        self.states = states.copy()
        key = (width, taps)
        if key not in _TABLE_CACHE:
            _TABLE_CACHE[key] = _jump_tables(width, taps)
        self._tables = _TABLE_CACHE[key]

    @classmethod
    def from_seed(cls, seed: int, shape, width: int = 16) -> "LfsrBank":
        n = int(np.prod(shape))
        raw = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)
        states = raw & np.uint64((1 << width) - 1)
        states[states == 0] = 1
        return cls(states.reshape(shape), width=width)

    def next_words(self) -> np.ndarray:
        words = self.states.copy()
        new = np.zeros_like(self.states)
        for b, table in enumerate(self._tables):
            new ^= table[(self.states >> np.uint64(8 * b)) & np.uint64(0xFF)]
        self.states = new
        return words

    def bernoulli(self, mu: float) -> np.ndarray:
        return self.next_words() < np.uint64(bernoulli_threshold(mu, self.width))

    def snapshot(self) -> np.ndarray:
        return self.states.copy()
