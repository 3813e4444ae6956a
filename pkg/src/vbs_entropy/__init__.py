"""Entanglement entropy of valence-bond-solid states on reflection-symmetric lattices."""

__version__ = "0.1.0"
