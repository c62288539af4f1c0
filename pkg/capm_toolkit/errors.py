"""Exception hierarchy shared by every toolkit module."""

from __future__ import annotations

import datetime as dt


class CapmToolkitError(Exception):
    """Base class for all toolkit errors."""


class PriceListParseError(CapmToolkitError, ValueError):
    """A price-list line could not be parsed (strict mode)."""

    def __init__(self, line: int, column: int, reason: str):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column}: {reason}")


class PanelConflictError(CapmToolkitError, ValueError):
    """Two records for the same (ticker, date) disagree on the close."""

    def __init__(self, ticker: str, date: dt.date, first: float, second: float):
        self.ticker = ticker
        self.date = date
        self.first = first
        self.second = second
        super().__init__(
            f"conflicting closes for {ticker} on {date.isoformat()}: {first!r} vs {second!r}"
        )


class DomainError(CapmToolkitError, ValueError):
    """An argument lies outside the domain of the operation."""


class InsufficientDataError(CapmToolkitError, ValueError):
    """Too few observations for the requested estimate."""


class DegenerateRegressorError(CapmToolkitError, ValueError):
    """The regressor is constant, so the slope is undefined."""


class UndefinedStatisticError(CapmToolkitError, ValueError):
    """A statistic has a zero denominator for the given input."""


class InvalidSpecError(CapmToolkitError, ValueError):
    """A simulation spec (or experiment setting) failed validation."""


class EmptyOverlapError(CapmToolkitError):
    """Stock, market and risk-free series share no usable months."""
