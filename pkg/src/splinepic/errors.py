"""Exception types shared across the package."""


class SplinepicError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SplinepicError):
    """Inconsistent or invalid configuration (e.g. h does not divide the box)."""


class DomainError(SplinepicError):
    """A point or particle left the domain on a non-periodic axis."""


class UsageError(SplinepicError):
    """An operation was called with unsupported arguments."""


class ConvergenceFailure(SplinepicError):
    """Iterative solver exceeded its iteration budget.

    Carries the relative residual history in ``residuals``.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class StabilityViolation(SplinepicError):
    """Negative curvature detected in CG: the sampled mass operator is not
    positive definite.  Usually means the particle/grid spacing ratio d is
    too large."""
