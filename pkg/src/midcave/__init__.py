"""Numerical toolkit for symmetric stable processes killed outside
intervals and boxes: densities, finite-dimensional distributions,
survival, ground states and shape checks."""

__version__ = "0.1.0"
