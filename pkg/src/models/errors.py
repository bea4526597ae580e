"""
Exceptions raised by the incidence laboratory models.
"""
from typing import Optional


class IncidenceLabError(Exception):
    """Base class for every error raised by the models."""


class InvariantViolationError(IncidenceLabError, ValueError):
    """A value does not satisfy the invariants of its type."""


class ZeroPolynomialError(IncidenceLabError, ValueError):
    """An operation that needs a nonzero polynomial received the zero polynomial."""


class IdenticalLinesError(IncidenceLabError, ValueError):
    """Two lines expected to be distinct have the same canonical form."""


class DomainError(IncidenceLabError, ValueError):
    """Arguments lie outside the domain of a formula."""


class TooLargeError(IncidenceLabError, ValueError):
    """An exhaustive search was requested beyond its size limit."""


class RangeTooSmallError(IncidenceLabError):
    """The coordinate range cannot produce enough distinct objects."""


class RejectionBudgetExceededError(IncidenceLabError):
    """Rejection sampling gave up before satisfying its constraints."""


class SearchBudgetExceededError(IncidenceLabError):
    """No certified bisector was found within the attempt budget."""


class BezoutBoundViolation(IncidenceLabError):
    """A root, intersection or cell-crossing count exceeded its Bezout bound."""


class LineInZeroSetError(IncidenceLabError):
    """The line lies inside the zero-set of a partition factor."""

    def __init__(self, factor_index: int):
        super().__init__(f"line lies in the zero-set of factor {factor_index}")
        self.factor_index = factor_index


class FlatInZeroSetError(IncidenceLabError):
    """The 2-flat lies inside the zero-set of a partition factor."""

    def __init__(self, factor_index: int):
        super().__init__(f"2-flat lies in the zero-set of factor {factor_index}")
        self.factor_index = factor_index


class ConfigParseError(IncidenceLabError, ValueError):
    """A configuration file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column
