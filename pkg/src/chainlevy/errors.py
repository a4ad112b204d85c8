"""Typed exceptions shared by all modules."""


class ChainLevyError(Exception):
    """Base class for package errors."""


class ConfigError(ChainLevyError, ValueError):
    """Invalid or missing configuration."""


class DegenerateInputError(ChainLevyError, ValueError):
    """Input where a quantity is undefined (e.g. theta at k=0, B=0)."""


class SingularityError(ChainLevyError, ValueError):
    """Evaluation at a point where the function diverges (k=0)."""


class QuadratureError(ChainLevyError, ArithmeticError):
    """Quadrature error estimate above the requested tolerance."""


class NonConvergenceError(ChainLevyError, ArithmeticError):
    """Iterative solver did not converge."""


class InsufficientTrajectoryError(ChainLevyError, ValueError):
    """Trajectory clock does not cover the requested horizon."""


class BudgetError(ChainLevyError, RuntimeError):
    """Simulation exceeded its jump budget."""


class GridMismatchError(ChainLevyError, ValueError):
    """Profiles live on different grids."""


class ToleranceFailure(ChainLevyError):
    """A numerical acceptance check failed."""
