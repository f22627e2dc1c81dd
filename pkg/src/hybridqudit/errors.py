"""Exception types raised across the package."""


class HybridQuditError(Exception):
    """Base class for all package errors."""


class RejectedInputError(HybridQuditError, ValueError):
    """An argument violates an operation's precondition."""


class InvalidDensityMatrixError(RejectedInputError):
    """Matrix is not Hermitian, not unit trace, or has negative eigenvalues."""


class DegenerateStateError(HybridQuditError):
    """A construction or post-selection produced a zero-norm state."""


class UndefinedVisibilityError(HybridQuditError):
    pass


class UndefinedExpectationError(HybridQuditError):
    pass


class BootstrapError(HybridQuditError):
    """More than half of the bootstrap resamples failed."""
