"""Exception types raised across the package."""


class InfoclustError(Exception):
    """Base class; carries a short machine-readable ``code``."""

    code = "INTERNAL"


class SingularBlockError(InfoclustError, ArithmeticError):
    """A conditioning block (or a normal-equation matrix) is not invertible."""

    code = "SINGULAR"

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class ConvergenceError(InfoclustError, RuntimeError):
    """An iteration failed to reach its fixed point.

    Attributes:
        residual: last residual (covariance iterations) or ``None``.
        last: the last two iterates (transfer iterations) or ``None``.
    """

    code = "NONCONVERGENCE"

    def __init__(self, message, residual=None, last=None):
        super().__init__(message)
        self.residual = residual
        self.last = last


class NumericalDomainError(InfoclustError, ValueError):
    code = "NUMERICAL_DOMAIN"


class DataError(InfoclustError, ValueError):
    code = "DATA_INVALID"
