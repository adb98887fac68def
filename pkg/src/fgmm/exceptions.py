"""Exception types raised by the fgmm package."""


class FgmmError(Exception):
    """Base class for all fgmm errors."""


class DomainError(FgmmError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DimensionError(FgmmError, ValueError):
    """Array shapes or index sets are inconsistent."""


class DegenerateInstrumentError(FgmmError, ValueError):
    """An instrument column is (numerically) constant or duplicated.

    Carries the offending 0-based column index in ``column``.
    """

    def __init__(self, column, message):
        super().__init__(message)
        self.column = column


class SingularDesignError(FgmmError, ArithmeticError):
    """A matrix that must be inverted is numerically singular."""


class NumericError(FgmmError, ArithmeticError):
    """A non-finite value appeared during an evaluation.

    ``coordinate`` holds the coordinate index being processed, if any.
    """

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate
