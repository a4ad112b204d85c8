"""Kinetic and Lévy-limit laboratory for a magnetized harmonic chain."""

__version__ = "0.1.0"

from .errors import (
    ChainLevyError,
    ConfigError,
    DegenerateInputError,
    SingularityError,
    QuadratureError,
    NonConvergenceError,
    InsufficientTrajectoryError,
    BudgetError,
    GridMismatchError,
    ToleranceFailure,
)
from .spectral import SpectralParams, ModeState

__all__ = [
    "__version__",
    "ChainLevyError",
    "ConfigError",
    "DegenerateInputError",
    "SingularityError",
    "QuadratureError",
    "NonConvergenceError",
    "InsufficientTrajectoryError",
    "BudgetError",
    "GridMismatchError",
    "ToleranceFailure",
    "SpectralParams",
    "ModeState",
]
