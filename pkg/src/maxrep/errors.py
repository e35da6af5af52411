"""Exception types shared across the package.

The CLI maps these onto exit statuses, so every failure a user can trigger
should surface as one of them.
"""


class MaxRepError(Exception):
    """Base class for all package errors."""


class ValidationError(MaxRepError, ValueError):
    """Bad user input (exit status 1)."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a function."""


class ResourceLimitError(MaxRepError):
    """A configured size ceiling would be exceeded (exit status 2)."""


class InvariantViolation(MaxRepError):
    """An internal consistency check failed (exit status 3)."""


class ConstructionError(MaxRepError):
    """A constructive procedure could not produce its object."""


class DataError(MaxRepError):
    """Missing, unreadable or insufficient input data."""


class ConvergenceError(MaxRepError):
    """A numerical routine missed its tolerance.

    ``estimate`` carries the best value obtained so that callers can decide
    whether it is still usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
