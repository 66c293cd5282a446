"""Numerical and exact checks for so(1,n)-bundle calculus near totally geodesic boundaries."""

__version__ = "0.1.0"
