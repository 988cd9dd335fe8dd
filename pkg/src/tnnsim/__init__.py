"""Cycle-accurate simulator and cost model for temporal neural network columns."""

__version__ = "0.1.0"
