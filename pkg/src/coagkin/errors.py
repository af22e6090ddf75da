"""Exception types raised across the package."""


class CoagkinError(Exception):
    """Base class for all package errors."""


class ConfigError(CoagkinError, ValueError):
    """Invalid configuration value or section."""


class DomainError(CoagkinError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class GridMismatchError(CoagkinError, ValueError):
    """Two grid functions that must share a grid do not."""


class ConvergenceError(CoagkinError, RuntimeError):
    """Iterative solver did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BlowUpError(CoagkinError, FloatingPointError):
    """Time integration produced non-finite values or unbounded growth."""
