"""Numerical laboratory for generalized Hardy inequalities."""
__version__ = "0.1.0"
