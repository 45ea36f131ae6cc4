"""Finite-dimensional Feynman-Kac perturbation of quantum stochastic flows."""

__version__ = "0.1.0"
