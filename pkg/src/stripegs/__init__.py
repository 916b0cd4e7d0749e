"""Striped ground states of Ising models with competing interactions."""

__version__ = "0.1.0"
