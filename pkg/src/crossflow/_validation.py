"""Error types and small input checks shared across the package."""

import numpy as np


class CrossflowError(Exception):
    """Base class for all package errors."""


class DomainError(CrossflowError, ValueError):
    pass


class ParameterError(CrossflowError, ValueError):
    pass


class ValidationError(CrossflowError):
    """A structural hypothesis fails for the given parameters."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateInputError(CrossflowError, ValueError):
    pass


class PreconditionError(CrossflowError, ValueError):
    pass


class ConfigurationError(CrossflowError):
    pass


class SolverError(CrossflowError):
    pass


class StepError(SolverError):
    """Inner JKO minimization did not converge; carries the best iterate."""

    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap


def as_nonneg(x, name="value"):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    return arr


def check_positive(x, name):
    if not np.isfinite(x) or x <= 0:
        raise ParameterError(f"{name} must be positive, got {x}")
    return float(x)


def check_in(value, allowed, name):
    if value not in allowed:
        raise ParameterError(f"{name} must be one of {sorted(allowed)}, got {value!r}")
    return value


def scalar_or_array(arr):
    """Return a Python float for 0-d input, otherwise the array."""
    return float(arr) if np.ndim(arr) == 0 else arr
