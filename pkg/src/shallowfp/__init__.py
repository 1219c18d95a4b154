"""Shallow quantum fingerprinting for MOD_p quantum finite automata."""

__version__ = "0.1.0"
