"""Contextual stochastic block model simulation with MAP-optimal propagation."""

__version__ = "0.1.0"
