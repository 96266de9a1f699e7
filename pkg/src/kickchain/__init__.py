"""Floquet spin chains, exact diagonalization and entanglement statistics against random-matrix baselines."""

__version__ = "0.1.0"
