"""Symbolic engine for the nonlinear super integrable couplings of a
generalized super AKNS hierarchy."""

__version__ = "0.1.0"
