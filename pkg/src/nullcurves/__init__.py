"""Bounded complete null curves: construction machinery and diagnostics."""

from . import algebra, expressions, grids, integrator, labyrinth, weierstrass

__all__ = [
    "algebra",
    "expressions",
    "grids",
    "integrator",
    "labyrinth",
    "weierstrass",
]

__version__ = "0.1.0"
