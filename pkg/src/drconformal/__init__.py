"""Numerical checks that conformal vector fields on Damek-Ricci spaces are Killing."""

__version__ = "0.1.0"
