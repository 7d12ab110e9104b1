"""Sequence-form equilibrium solving with dilated entropy smoothing."""

__version__ = "0.1.0"
