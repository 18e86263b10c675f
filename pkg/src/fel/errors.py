"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures to distinct process exit statuses.
"""

from __future__ import annotations

__all__ = ["FELError",
           "InvalidArgument",
           "InvalidConfig",
           "InvalidComponents",
           "GridTooShort",
           "GridMismatch",
           "SpecNotFitted",
           "DegenerateDistances",
           "DegenerateScores",
           "EmptyNeighborhood",
           "InsufficientSupport",
           "BracketingFailed",
           "SingularDesign",
           "ParseError",
           "MissingColumn",
           "InsufficientData"]


class FELError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidArgument(FELError, ValueError):
    exit_code = 2


class InvalidConfig(InvalidArgument):
    pass


class InvalidComponents(InvalidArgument):
    pass


class GridTooShort(FELError, ValueError):
    exit_code = 3


class GridMismatch(FELError, ValueError):
    exit_code = 3


class SpecNotFitted(FELError, RuntimeError):
    exit_code = 3


class DegenerateDistances(FELError, ValueError):
    exit_code = 4


class DegenerateScores(FELError, ValueError):
    exit_code = 4


class EmptyNeighborhood(FELError):
    """No training curve has positive kernel weight at the query point.

    ``min_distance`` is the distance to the closest training curve and
    ``index`` identifies the offending query (or training sample) when known.
    """

    exit_code = 5

    def __init__(self, message: str, min_distance: float = float("nan"),
                 index: int | None = None):
        super().__init__(message)
        self.min_distance = min_distance
        self.index = index


class InsufficientSupport(EmptyNeighborhood):
    """Fewer support points than an interval construction needs."""


class BracketingFailed(FELError, RuntimeError):
    exit_code = 6


class SingularDesign(FELError, ValueError):
    exit_code = 7


class ParseError(FELError, ValueError):
    exit_code = 8

    def __init__(self, message: str, line: int | None = None,
                 column: int | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.line = line
        self.column = column


class MissingColumn(FELError, ValueError):
    exit_code = 8


class InsufficientData(FELError, ValueError):
    exit_code = 9
