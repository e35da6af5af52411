"""Maximal irreducible representation dimensions of the symmetric group."""

__version__ = "0.1.0"
