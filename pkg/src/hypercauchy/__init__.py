"""Mollified spectral evolution of symmetric hyperbolic systems on tori, with
Dirac-Maxwell, identity-checking and causal-construction labs."""
from .evolve import SolveControls, Trajectory, integrate
from .grid_field import Field, GridSpec, Mollifier
from .system import HyperbolicSystem, validate_system

__version__ = "0.1.0"

__all__ = [
    "Field",
    "GridSpec",
    "HyperbolicSystem",
    "Mollifier",
    "SolveControls",
    "Trajectory",
    "integrate",
    "validate_system",
]
