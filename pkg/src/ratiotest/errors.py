"""Exception types shared across the package."""


class RatiotestError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(RatiotestError, ValueError):
    """Array shapes are inconsistent with the model or with each other."""


class NonpositiveRatio(RatiotestError, ValueError):
    """A linear or power link was evaluated where the ratio is not positive.

    Raised instead of clamping: a clamped ratio would silently corrupt the
    estimating equation.
    """


class SingularJacobian(RatiotestError, RuntimeError):
    """The Newton Jacobian (or the matrix U) cannot be inverted."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class NotConverged(RatiotestError, RuntimeError):
    """A downstream computation required a converged fit."""


class SingularCovariance(RatiotestError, RuntimeError):
    """A sample covariance matrix is (numerically) singular."""


class InvalidAlpha(RatiotestError, ValueError):
    """Power exponent outside the admissible range (alpha > -1, alpha != 0)."""


class InvalidDof(RatiotestError, ValueError):
    """Degrees of freedom must be a positive integer."""


class InvalidLevel(RatiotestError, ValueError):
    """Probability level outside the open interval (0, 1)."""


class RejectionSamplingStall(RatiotestError, RuntimeError):
    """Rejection sampler acceptance rate fell below the viability floor."""


class MalformedCsv(RatiotestError, ValueError):
    """A sample CSV could not be parsed; carries the offending position."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class UsageError(RatiotestError, ValueError):
    """Command line was not understood."""
