"""Exception hierarchy shared by every module."""


class ScbmError(Exception):
    """Base class for all package errors."""


class ConfigError(ScbmError, ValueError):
    """A user-facing configuration is invalid (bad path id, K mismatch, ...)."""


class InvalidSpecError(ScbmError, ValueError):
    """A block model specification violates its invariants."""


class DegenerateDegreeError(ScbmError, ValueError):
    """A regularized degree matrix has a non-positive diagonal."""


class StabilizationError(ScbmError, RuntimeError):
    """The stabilization loop hit its iteration cap."""


class SingularDesignError(ScbmError, ArithmeticError):
    """A least-squares design matrix is rank deficient or too ill-conditioned."""

    def __init__(self, message, regression=None, variable=None):
        super().__init__(message)
        self.regression = regression
        self.variable = variable


class DivergenceError(ScbmError, ArithmeticError):
    """A simulation was requested from a clearly explosive transition set."""


class NumericalError(ScbmError, ArithmeticError):
    """An internal numerical routine failed unexpectedly."""
