"""Stochastic comparability, attractiveness and order-preserving couplings of lattice systems."""

__version__ = "0.1.0"
