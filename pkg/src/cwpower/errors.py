"""Exception and warning classes shared across the package."""


class CWPowerError(Exception):
    """Base class for all errors raised by cwpower."""


class InvalidDimensionError(CWPowerError, ValueError):
    pass


class ShapeError(CWPowerError, ValueError):
    pass


class DomainError(CWPowerError, ValueError):
    """Invalid problem domain: empty interior, bad spacing, bad data values."""


class InvalidSpacingError(DomainError):
    pass


class ConnectivityError(DomainError):
    pass


class ParseError(CWPowerError, ValueError):
    """Malformed input file. Carries the offending 1-based line number."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class SingularMatrixError(CWPowerError, ArithmeticError):
    pass


class ShiftCollisionError(SingularMatrixError):
    """The shifted system ``shift*I - op`` could not be factored.

    For the iterations in this package that means the shift has (numerically)
    reached an eigenvalue of the operator.
    """

    def __init__(self, shift, message=None):
        self.shift = shift
        super().__init__(message or f"shifted system is numerically singular at shift={shift!r}")


class ShiftTooSmallError(ShiftCollisionError):
    """A fixed shift that does not exceed the principal eigenvalue."""


class PositivityError(CWPowerError, ArithmeticError):
    pass


class FactorizationMismatchError(CWPowerError, ValueError):
    pass


class StateError(CWPowerError, ValueError):
    pass


class UnsupportedCriterionError(CWPowerError, ValueError):
    pass


class InsufficientDataError(CWPowerError, ValueError):
    pass


class NoConvergenceError(CWPowerError, RuntimeError):
    pass


class IllConditionedWarning(UserWarning):
    pass
