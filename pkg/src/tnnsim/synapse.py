"""Synapse weight-counter FSM with wrap-around thermometer readout.

The counter doubles as weight storage. A leading input edge starts a
readout: the counter decrements every cycle the input is high, emitting a 1
until it first hits zero, then wraps to ``w_max`` and keeps counting down
silently. An 8-cycle pulse therefore performs exactly ``w_max + 1``
decrements and leaves the counter back at the stored weight.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .temporal import ABSENT, GAMMA, PULSE_WIDTH, W_MAX


@dataclass(frozen=True)
class SynapseState:
    weight: int
    counter: int
    in_readout: bool = False
    prev_input: int = 0

    def __post_init__(self):
        if not 0 <= self.weight <= W_MAX:
            raise ValueError(f"weight {self.weight} outside 0..{W_MAX}")

    @classmethod
    def at_rest(cls, weight: int) -> "SynapseState":
        return cls(weight=weight, counter=weight)


def synapse_step(state: SynapseState, input_bit: int) -> tuple[SynapseState, int]:
    if not input_bit:
        # trailing edge (or idle): the pulse is over, the counter holds the weight again
        return replace(state, in_readout=False, prev_input=0), 0

    in_readout = state.in_readout or not state.prev_input
    out = 0
    if in_readout:
        if state.counter > 0:
            out = 1
        else:
            in_readout = False  # counter wraps; silent until the trailing edge
    counter = (state.counter - 1) % (W_MAX + 1)
    return replace(state, counter=counter, in_readout=in_readout, prev_input=1), out


def apply_update(state: SynapseState, inc: int, dec: int) -> SynapseState:
    if inc and dec:
        raise ValueError("increment and decrement asserted together")
    if state.in_readout or state.counter != state.weight:
        raise RuntimeError("weight update requested while a readout is in progress")
    w = state.weight
    if inc:
        w = min(w + 1, W_MAX)
    elif dec:
        w = max(w - 1, 0)
    return SynapseState(weight=w, counter=w, prev_input=state.prev_input)


def input_pulse(arrival: int, cycles: int = GAMMA) -> list[int]:
    """Input-line bits for one gamma cycle: an 8-cycle pulse from ``arrival``."""
    if arrival == ABSENT:
        return [0] * cycles
    return [1 if arrival <= t < arrival + PULSE_WIDTH else 0 for t in range(cycles)]


def readout_oracle(weight: int, arrival: int, cycles: int = GAMMA) -> list[int]:
    if arrival == ABSENT:
        return [0] * cycles
    return [1 if arrival <= t < arrival + weight else 0 for t in range(cycles)]


class Crossbar:
    """p x q synapse FSMs stepped together.

    Array form of :func:`synapse_step`: each unit clock takes the p input
    line bits (broadcast to all q neurons) and returns the p x q out bits.
    """

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.int16)
        if weights.ndim != 2:
            raise ValueError("crossbar weights must be a p x q matrix")
        if weights.min(initial=0) < 0 or weights.max(initial=0) > W_MAX:
            raise ValueError(f"weights outside 0..{W_MAX}")
        self.weights = weights.copy()
        self.counter = weights.copy()
        self.in_readout = np.zeros(weights.shape, dtype=bool)
        self.prev_input = np.zeros(weights.shape[0], dtype=bool)

    @property
    def shape(self):
        return self.weights.shape

    def step(self, input_bits) -> np.ndarray:
        bits = np.asarray(input_bits, dtype=bool)
        high = bits[:, None]
        leading = (bits & ~self.prev_input)[:, None]
        reading = (self.in_readout | leading) & high
        out = reading & (self.counter > 0)
        self.in_readout = reading & (self.counter > 0)
        self.counter = np.where(high, (self.counter - 1) % (W_MAX + 1), self.counter)
        self.prev_input = bits
        return out

    def end_frame(self):
        """Drop all input lines at the gamma boundary."""
        self.prev_input = np.zeros_like(self.prev_input)
        self.in_readout[:] = False

    def restored(self) -> bool:
        return bool(np.array_equal(self.counter, self.weights))

    def load(self, weights):
        if not self.restored():
            raise RuntimeError("weight update requested while a readout is in progress")
        self.weights = np.asarray(weights, dtype=np.int16).copy()
        self.counter = self.weights.copy()
