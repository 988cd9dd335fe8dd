"""p x q TNN column: crossbar, neuron bodies, 1-WTA inhibition and learning.

Two engines compute a gamma cycle:

* ``cycle`` steps all synapse FSMs and body accumulators unit clock by unit
  clock, with the WTA latch closing on the first firing cycle;
* ``functional`` jumps straight to fire times with the ramp-no-leak oracle.

Both hand the same (x, z) spike times to the same plasticity routine, so
with equal seeds their weight trajectories must match bit for bit.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .neuron import fire_times
from .plasticity import (
    PlasticityParams,
    Reward,
    apply_deltas,
    classify_cases,
    compute_reward,
    weight_deltas,
)
from .synapse import Crossbar
from .temporal import ABSENT, GAMMA, PULSE_WIDTH, SPIKE_DTYPE, W_MAX, LfsrBank, as_volley


class LearningMode(str, enum.Enum):
    STDP = "stdp"
    RSTDP = "rstdp"


ENGINES = ("cycle", "functional")


@dataclass
class ColumnConfig:
    p: int
    q: int
    theta: int | Sequence[int]
    params: PlasticityParams = field(default_factory=PlasticityParams)
    mode: LearningMode = LearningMode.STDP
    seed: int = 0
    lfsr_width: int = 32
    shared_lfsr: bool = False
    init_weights: str | int = "uniform"

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("column needs p >= 1 inputs and q >= 1 neurons")
        theta = np.broadcast_to(np.asarray(self.theta, dtype=np.int64), (self.q,))
        if np.any(theta < 1):
            raise ValueError("theta must be positive")
        self.mode = LearningMode(self.mode)

    def thetas(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.theta, dtype=np.int32), (self.q,)).copy()


@dataclass
class GammaResult:
    output: np.ndarray            # post-WTA volley, q spike times
    winner: Optional[int]
    fire_times: np.ndarray        # pre-inhibition fire times
    reward: Optional[Reward]
    mean_abs_dw: float


def wta_inhibit(times) -> np.ndarray:
    times = np.asarray(times, dtype=SPIKE_DTYPE)
    out = np.full(times.shape, ABSENT, dtype=SPIKE_DTYPE)
    if times.size and times.min() != ABSENT:
        k = int(np.argmin(times))  # argmin returns the lowest index on ties
        out[k] = times[k]
    return out


def winner_of(output) -> Optional[int]:
    present = np.flatnonzero(np.asarray(output) != ABSENT)
    return int(present[0]) if present.size else None


def initial_weights(config: ColumnConfig) -> np.ndarray:
    shape = (config.p, config.q)
    if config.init_weights == "uniform":
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
        return rng.integers(0, W_MAX + 1, size=shape).astype(np.int16)
    value = int(config.init_weights)
    if not 0 <= value <= W_MAX:
        raise ValueError(f"initial weight {value} outside 0..{W_MAX}")
    return np.full(shape, value, dtype=np.int16)


class Column:
    def __init__(self, config: ColumnConfig, weights=None):
        self.config = config
        w = initial_weights(config) if weights is None else np.asarray(weights, dtype=np.int16)
        if w.shape != (config.p, config.q):
            raise ValueError(f"weights shape {w.shape} != ({config.p}, {config.q})")
        self.crossbar = Crossbar(w)
        self.theta = config.thetas()
        bank_shape = (1, 1) if config.shared_lfsr else (config.p, config.q)
        self.rng = LfsrBank.from_seed([config.seed, 1], bank_shape, width=config.lfsr_width)

    @property
    def weights(self) -> np.ndarray:
        return self.crossbar.weights

    def set_weights(self, weights):
        self.crossbar.load(weights)

    # -- forward passes ------------------------------------------------

    def _cycle_forward(self, x: np.ndarray):
        q = self.config.q
        acc = -self.theta.astype(np.int32)
        fired = np.full(q, ABSENT, dtype=SPIKE_DTYPE)
        latched = False
        winner = None
        present = x != ABSENT
        for t in range(GAMMA):
            bits = present & (x <= t) & (t < x + PULSE_WIDTH)
            out_bits = self.crossbar.step(bits)
            acc += out_bits.sum(axis=0)
            now = (acc >= 0) & (fired == ABSENT)
            fired[now] = t
            if not latched and now.any():
                # latch closes on the first firing cycle; lowest index passes
                winner = int(np.flatnonzero(now)[0])
                latched = True
        self.crossbar.end_frame()
        if not self.crossbar.restored():
            raise RuntimeError("synapse counters not restored at gamma end")
        output = np.full(q, ABSENT, dtype=SPIKE_DTYPE)
        if winner is not None:
            output[winner] = fired[winner]
        return fired, output, winner

    def _functional_forward(self, x: np.ndarray):
        fired = fire_times(self.weights, x, self.theta)
        output = wta_inhibit(fired)
        return fired, output, winner_of(output)

    # -- one gamma cycle -----------------------------------------------

    def step(self, volley, label: int | None = None, engine: str = "cycle", learn: bool = True) -> GammaResult:
        x = as_volley(volley) if not isinstance(volley, np.ndarray) else volley.astype(SPIKE_DTYPE)
        if x.shape != (self.config.p,):
            raise ValueError(f"volley has {x.shape[0]} lines, column expects {self.config.p}")
        if np.any((x != ABSENT) & ((x < 0) | (x > W_MAX))):
            raise ValueError(f"volley spike times must lie in 0..{W_MAX}")
        rstdp = self.config.mode is LearningMode.RSTDP
        if learn and rstdp and label is None:
            raise ValueError("R-STDP training needs a label")

        if engine == "cycle":
            fired, output, winner = self._cycle_forward(x)
        elif engine == "functional":
            fired, output, winner = self._functional_forward(x)
        else:
            raise ValueError(f"unknown engine {engine!r}")

        reward = None
        mean_abs_dw = 0.0
        if learn:
            reward = compute_reward(winner, label, q=self.config.q) if rstdp else Reward.UNSUPERVISED
            old = self.weights
            cases = classify_cases(x, output)
            deltas = weight_deltas(old, cases, reward, self.config.params, self.rng)
            new = apply_deltas(old, deltas)
            mean_abs_dw = float(np.abs(new.astype(np.int32) - old).mean())
            self.crossbar.load(new)
        return GammaResult(output=output, winner=winner, fire_times=fired, reward=reward, mean_abs_dw=mean_abs_dw)


def column_gamma(column: Column, volley, label=None, learn: bool = True) -> GammaResult:
    return column.step(volley, label, engine="cycle", learn=learn)


def run_functional_gamma(column: Column, volley, label=None, learn: bool = True) -> GammaResult:
    return column.step(volley, label, engine="functional", learn=learn)


# -- layers -----------------------------------------------------------------

@dataclass
class LayerSpec:
    columns: list[ColumnConfig]
    wiring: list[Sequence[int]]   # per column: the layer-input line feeding each of its p inputs

    def __post_init__(self):
        if len(self.columns) != len(self.wiring):
            raise ValueError("one wiring list per column required")
        for cfg, lines in zip(self.columns, self.wiring):
            if len(lines) != cfg.p:
                raise ValueError(f"column with p={cfg.p} wired to {len(lines)} lines")


def clamp_for_next_layer(output: np.ndarray) -> np.ndarray:
    """Fire times past the encoding window cannot be re-encoded downstream."""
    out = np.asarray(output, dtype=SPIKE_DTYPE).copy()
    out[(out != ABSENT) & (out > W_MAX)] = ABSENT
    return out


class Layer:
    def __init__(self, spec: LayerSpec, weights=None):
        self.spec = spec
        weights = weights or [None] * len(spec.columns)
        self.columns = [Column(cfg, w) for cfg, w in zip(spec.columns, weights)]
        self.wiring = [np.asarray(lines, dtype=np.int64) for lines in spec.wiring]

    @property
    def width(self) -> int:
        return sum(cfg.q for cfg in self.spec.columns)

    def step(self, volley, labels=None, engine: str = "cycle", learn: bool = True):
        x = np.asarray(volley, dtype=SPIKE_DTYPE)
        labels = labels if labels is not None else [None] * len(self.columns)
        results = []
        for col, lines, label in zip(self.columns, self.wiring, labels):
            if lines.size and (lines.min() < 0 or lines.max() >= x.size):
                raise IndexError(f"wiring references line outside 0..{x.size - 1}")
            results.append(col.step(x[lines], label, engine=engine, learn=learn))
        output = np.concatenate([clamp_for_next_layer(r.output) for r in results]) if results else x[:0]
        return output, results


def layer_step(layer: Layer, volley, labels=None, engine: str = "cycle", learn: bool = True):
    return layer.step(volley, labels, engine=engine, learn=learn)


class Network:
    """Layers cascaded in order; each layer's clamped output feeds the next."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def step(self, volley, labels=None, engine: str = "cycle", learn: bool = True):
        labels = labels or [None] * len(self.layers)
        x = volley
        all_results = []
        for layer, layer_labels in zip(self.layers, labels):
            x, results = layer.step(x, layer_labels, engine=engine, learn=learn)
            all_results.append(results)
        return x, all_results
