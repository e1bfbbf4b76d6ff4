"""Exception types shared across the package."""


class RetrialQbdError(Exception):
    """Base class for all errors raised by this package."""


class NonErgodicError(RetrialQbdError):
    """The model has no stationary distribution (q = r = 1 and lambda*p >= nu_K)."""


class ConvergenceError(RetrialQbdError):
    """The backward fixed-point iteration did not converge within the depth cap."""


class NumericalError(RetrialQbdError):
    """A linear solve failed or produced an unusable result."""

    def __init__(self, message: str, level: int | None = None):
        super().__init__(message)
        self.level = level


class RegimeError(RetrialQbdError):
    """Operation called outside its parameter regime (persistent vs nonpersistent)."""


class ConfigError(RetrialQbdError):
    """Invalid experiment configuration or command-line usage."""
