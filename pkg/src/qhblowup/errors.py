"""Exception hierarchy shared by all modules."""


class QHError(Exception):
    """Base class for every error raised by qhblowup."""


class InputError(QHError, ValueError):
    """Malformed or inconsistent user input."""


class DomainError(QHError, ValueError):
    """A point lies outside the domain where an operation is defined."""


class HorizonError(DomainError):
    """A point at infinity was passed where a finite point is required."""


class ChartDomainError(DomainError):
    """A point is not covered by the requested chart."""


class ChartError(QHError):
    """No chart is available in which the requested operation is smooth."""


class NumericError(QHError, ArithmeticError):
    """A numerical procedure failed to converge or produced non-finite output."""


class UnsupportedError(QHError):
    """The hypotheses required by an operation are not met."""


class InsufficientDataError(QHError):
    """Not enough samples to perform a requested fit."""


class NotACycleError(NumericError):
    """The horizon flow has a zero, so the horizon is not a periodic orbit."""
