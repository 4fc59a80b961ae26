"""Numerical laboratory for rarefaction-wave interactions in the 2D nonlinear wave system."""

from .gas import GasLaw, QuadrantData, State, four_quadrant_states

__version__ = "0.1.0"

__all__ = ["GasLaw", "State", "QuadrantData", "four_quadrant_states", "__version__"]
