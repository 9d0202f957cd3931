"""Exception types shared across the package."""


class CascadeLaserError(Exception):
    """Base class for all package errors."""


class DomainError(CascadeLaserError, ValueError):
    """A parameter lies outside its physical domain."""


class UnsupportedPhaseError(CascadeLaserError, ValueError):
    """Closed forms exist only for a real initial coherence (theta = 0)."""


class ThresholdError(CascadeLaserError):
    """No steady state: one of the quadrature decay rates is not positive."""

    def __init__(self, message, lambda_minus=None, lambda_plus=None):
        super().__init__(message)
        self.lambda_minus = lambda_minus
        self.lambda_plus = lambda_plus


class StepSizeError(CascadeLaserError, ValueError):
    """Integration step exceeds the stability bound of the scheme."""


class ConvergenceError(CascadeLaserError):
    """An iterative or truncated computation failed to converge."""


class DimensionError(CascadeLaserError, ValueError):
    """Array shape does not match the truncated Hilbert space."""


class EmptyFeasibleRegionError(CascadeLaserError):
    """Every point of an optimization search is above threshold."""
