"""Exception types raised by the estimation pipeline."""


class PopSpecError(Exception):
    """Base class for all package errors."""


class NonConvergenceError(PopSpecError):
    """An iterative method stopped before meeting its tolerance."""


class TooFewPairsError(PopSpecError):
    """Fewer grid pairs survived than the estimator needs."""


class DegenerateSpectrumError(PopSpecError):
    """The sample spectrum cannot be rescaled (largest eigenvalue <= 0)."""


class NotPSDError(PopSpecError):
    """A matrix expected to be positive semi-definite has a negative eigenvalue."""


class LPError(PopSpecError):
    """The linear program did not reach an optimal solution."""

    def __init__(self, status, message=""):
        self.status = status
        super().__init__(message or f"linear program ended with status {status.value}")


class MonteCarloAbort(PopSpecError):
    """Too many Monte-Carlo repetitions failed."""

    def __init__(self, message, failures):
        self.failures = failures
        super().__init__(message)
