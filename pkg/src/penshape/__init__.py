"""Fixed-domain penalization toolkit for non-smooth shape optimization in 2D."""

from .grid import DiskRegion, Field, Grid, RectRegion, unit_square
from .heaviside import H, H_eps, H_eps_prime, Smoothing
from .nonsmooth import NonsmoothMap

__version__ = "0.1.0"

__all__ = [
    "DiskRegion",
    "Field",
    "Grid",
    "RectRegion",
    "unit_square",
    "H",
    "H_eps",
    "H_eps_prime",
    "Smoothing",
    "NonsmoothMap",
]
