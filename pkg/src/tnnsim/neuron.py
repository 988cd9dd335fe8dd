"""SRM0 neuron body with ramp-no-leak responses.

The body register starts at -theta each gamma cycle and adds the popcount of
the synapse output bits every unit clock; the sign bit flipping to 0 is the
fire condition, so no comparator is needed.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .temporal import ABSENT, GAMMA, PULSE_WIDTH, SPIKE_DTYPE, W_MAX


@dataclass(frozen=True)
class NeuronConfig:
    p: int
    theta: int
    pulse_width: int = PULSE_WIDTH

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("a neuron needs at least one synapse")
        if self.theta < 1:
            raise ValueError("theta must be a positive integer")


@dataclass(frozen=True)
class NeuronBodyState:
    accumulator: int
    fired_cycle: int = ABSENT
    pulse_remaining: int = 0
    cycle: int = 0

    @classmethod
    def reset(cls, theta: int) -> "NeuronBodyState":
        return cls(accumulator=-theta)


def body_step(state: NeuronBodyState, bits, p: int | None = None) -> tuple[NeuronBodyState, int]:
    bits = list(bits)
    if p is not None and len(bits) != p:
        raise ValueError(f"expected {p} synapse bits, got {len(bits)}")
    acc = state.accumulator + sum(1 for b in bits if b)
    fired_now = 0
    fired_cycle = state.fired_cycle
    pulse = max(state.pulse_remaining - 1, 0)
    # sign bit of the two's-complement register; once set, no refire this gamma
    if acc >= 0 and fired_cycle == ABSENT:
        fired_now = 1
        fired_cycle = state.cycle
        pulse = PULSE_WIDTH
    return replace(state, accumulator=acc, fired_cycle=fired_cycle, pulse_remaining=pulse, cycle=state.cycle + 1), fired_now


def response_oracle(weights, volley, theta: int, horizon: int = GAMMA) -> int:
    """Earliest t with sum_i min(max(t - x_i + 1, 0), w_i) >= theta, else ABSENT."""
    weights = list(weights)
    volley = list(volley)
    if len(weights) != len(volley):
        raise ValueError("weights and volley differ in length")
    for t in range(horizon):
        potential = 0
        for w, x in zip(weights, volley):
            if x != ABSENT:
                potential += min(max(t - x + 1, 0), w)
        if potential >= theta:
            return t
    return ABSENT


def spike_pulse(fired_cycle: int, cycles: int = GAMMA) -> list[int]:
    if fired_cycle == ABSENT:
        return [0] * cycles
    return [1 if fired_cycle <= t < fired_cycle + PULSE_WIDTH else 0 for t in range(cycles)]


def fire_times(weights: np.ndarray, volley: np.ndarray, theta, horizon: int = GAMMA) -> np.ndarray:
    """Vectorised response oracle for a p x q crossbar; one fire time per neuron."""
    weights = np.asarray(weights, dtype=SPIKE_DTYPE)
    x = np.asarray(volley, dtype=SPIKE_DTYPE)
    theta = np.broadcast_to(np.asarray(theta), (weights.shape[1],))
    t = np.arange(horizon, dtype=SPIKE_DTYPE)[:, None]
    # elapsed[t, i]: cycles of ramp seen by line i at the end of cycle t
    elapsed = np.clip(t - x[None, :] + 1, 0, W_MAX + 1)
    elapsed[:, x == ABSENT] = 0
    potential = np.minimum(elapsed[:, :, None], weights[None, :, :]).sum(axis=1)
    crossed = potential >= theta[None, :]
    first = np.argmax(crossed, axis=0)
    return np.where(crossed.any(axis=0), first, ABSENT).astype(SPIKE_DTYPE)
