"""Constrained sequence labeling with soft global constraints via dual decomposition."""

__version__ = "0.1.0"
