"""
Daily price-list ingestion.

Each line of a converted price list is one record::

    TICKER,YYYY-MM-DD,CLOSE[,VOLUME]

CLOSE is a plain decimal (no thousands separators, no exponent). Lines starting
with ``#``, blank lines and a ``TICKER,DATE,...`` header are skipped. The column
layout of the exchange's own PDF lists is not recoverable, so this grammar is
the stand-in post-conversion format.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DomainError, PanelConflictError, PriceListParseError

logger = logging.getLogger(__name__)

# ---------- Grammar ----------
TICKER_RE = re.compile(r"[A-Z]{2,6}")
DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}")
DECIMAL_RE = re.compile(r"[+-]?\d+(\.\d+)?")
VOLUME_RE = re.compile(r"[+-]?\d+")


def format_decimal(value: float) -> str:
    """Shortest positional decimal that parses back to exactly ``value``."""
    return np.format_float_positional(value, trim="-")


@dataclass(frozen=True)
class PriceRecord:
    """One closing price of one ticker on one day."""

    ticker: str
    date: dt.date
    close: float
    volume: int | None = None

    def __post_init__(self):
        if not TICKER_RE.fullmatch(self.ticker):
            raise DomainError(f"ticker must match [A-Z]{{2,6}}, got {self.ticker!r}")
        if not (math.isfinite(self.close) and self.close > 0):
            raise DomainError(f"close must be positive and finite, got {self.close!r}")
        if self.volume is not None and self.volume < 0:
            raise DomainError(f"volume must be non-negative, got {self.volume!r}")

    def to_line(self) -> str:
        parts = [self.ticker, self.date.isoformat(), format_decimal(self.close)]
        if self.volume is not None:
            parts.append(str(self.volume))
        return ",".join(parts)


@dataclass(frozen=True)
class ParseReport:
    accepted: int = 0
    rejected: tuple[tuple[int, str], ...] = ()
    duplicates: tuple[tuple[str, dt.date], ...] = ()

    @property
    def data_lines(self) -> int:
        return self.accepted + len(self.rejected)


# ---------- Line parsing ----------
def _is_header(line: str) -> bool:
    fields = [f.strip().upper() for f in line.split(",")[:2]]
    return fields == ["TICKER", "DATE"]


def _is_skipped(line: str) -> bool:
    return not line or line.startswith("#") or _is_header(line)


def _parse_line(line: str, line_no: int) -> PriceRecord:
    """Parse one data line or raise PriceListParseError naming the bad field."""
    fields = [f.strip() for f in next(csv.reader([line]))]
    if len(fields) < 3:
        raise PriceListParseError(line_no, len(fields) + 1, "missing field")
    if len(fields) > 4:
        raise PriceListParseError(line_no, 5, "unexpected extra field")

    ticker = fields[0].upper()
    if not TICKER_RE.fullmatch(ticker):
        raise PriceListParseError(line_no, 1, f"invalid ticker {fields[0]!r}")

    if not DATE_RE.fullmatch(fields[1]):
        raise PriceListParseError(line_no, 2, f"invalid date {fields[1]!r}")
    try:
        date = dt.date.fromisoformat(fields[1])
    except ValueError:
        raise PriceListParseError(line_no, 2, f"invalid calendar date {fields[1]!r}") from None

    raw_close = fields[2]
    if "," in raw_close:
        raise PriceListParseError(line_no, 3, "thousands separators are not accepted")
    if not DECIMAL_RE.fullmatch(raw_close):
        raise PriceListParseError(line_no, 3, f"invalid price {raw_close!r}")
    close = float(raw_close)
    if not math.isfinite(close):
        raise PriceListParseError(line_no, 3, "price too large to represent")
    if close <= 0:
        raise PriceListParseError(line_no, 3, "non-positive price")

    volume = None
    if len(fields) == 4:
        if not VOLUME_RE.fullmatch(fields[3]):
            raise PriceListParseError(line_no, 4, f"invalid volume {fields[3]!r}")
        volume = int(fields[3])
        if volume < 0:
            raise PriceListParseError(line_no, 4, "negative volume")

    return PriceRecord(ticker=ticker, date=date, close=close, volume=volume)


def parse_price_list(text: str, strict: bool = False) -> tuple[list[PriceRecord], ParseReport]:
    """
    Parse a price-list dump into records.

    In strict mode the first malformed line raises PriceListParseError. Otherwise
    malformed lines are skipped and listed in the report; the parse never aborts.
    """
    records: list[PriceRecord] = []
    rejected: list[tuple[int, str]] = []
    duplicates: list[tuple[str, dt.date]] = []
    seen: set[tuple[str, dt.date]] = set()

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if _is_skipped(line):
            continue
        try:
            record = _parse_line(line, line_no)
        except PriceListParseError as err:
            if strict:
                raise
            logger.debug("rejected %s", err)
            rejected.append((line_no, err.reason))
            continue

        key = (record.ticker, record.date)
        if key in seen:
            duplicates.append(key)
        seen.add(key)
        records.append(record)

    if rejected:
        logger.warning("price list: %d line(s) rejected", len(rejected))
    report = ParseReport(accepted=len(records), rejected=tuple(rejected), duplicates=tuple(duplicates))
    return records, report


def serialize_price_list(records: Iterable[PriceRecord]) -> str:
    """Write records back in the canonical grammar, one per line."""
    lines = [r.to_line() for r in records]
    return "".join(line + "\n" for line in lines)


def parse_index_levels(text: str) -> pd.Series:
    """Parse ``YYYY-MM-DD,level`` lines into a date-indexed level series."""
    levels: dict[dt.date, float] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.lower().startswith("date,"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise PriceListParseError(line_no, min(len(fields) + 1, 3), "expected DATE,LEVEL")
        if not DATE_RE.fullmatch(fields[0]):
            raise PriceListParseError(line_no, 1, f"invalid date {fields[0]!r}")
        try:
            date = dt.date.fromisoformat(fields[0])
        except ValueError:
            raise PriceListParseError(line_no, 1, f"invalid calendar date {fields[0]!r}") from None
        if not DECIMAL_RE.fullmatch(fields[1]) or not 0 < float(fields[1]) < math.inf:
            raise PriceListParseError(line_no, 2, f"invalid index level {fields[1]!r}")

        level = float(fields[1])
        if date in levels and levels[date] != level:
            raise PanelConflictError("INDEX", date, levels[date], level)
        levels[date] = level

    series = pd.Series(levels, dtype=float, name="level").sort_index()
    series.index = pd.DatetimeIndex(series.index, name="date")
    return series


# ---------- Panel ----------
@dataclass(frozen=True)
class PricePanel:
    """Date-by-ticker grid of closes; NaN marks a day without a trade."""

    frame: pd.DataFrame

    @property
    def tickers(self) -> list[str]:
        return list(self.frame.columns)

    @property
    def dates(self) -> list[dt.date]:
        return [ts.date() for ts in self.frame.index]

    def close(self, ticker: str, date: dt.date) -> float | None:
        try:
            value = self.frame.at[pd.Timestamp(date), ticker]
        except KeyError:
            return None
        return None if pd.isna(value) else float(value)

    def window(self, start: dt.date | None = None, end: dt.date | None = None) -> PricePanel:
        """Restrict the panel to dates in ``[start, end]``."""
        frame = self.frame
        if start is not None:
            frame = frame[frame.index >= pd.Timestamp(start)]
        if end is not None:
            frame = frame[frame.index <= pd.Timestamp(end)]
        return PricePanel(frame)

    def to_csv(self) -> str:
        """Wide CSV: ``date`` then one column per ticker, blank where absent."""
        lines = [",".join(["date", *self.tickers])]
        for ts, row in self.frame.iterrows():
            cells = ["" if pd.isna(v) else format_decimal(float(v)) for v in row]
            lines.append(",".join([ts.date().isoformat(), *cells]))
        return "\n".join(lines) + "\n"


def _empty_frame() -> pd.DataFrame:
    return pd.DataFrame(index=pd.DatetimeIndex([], name="date"), dtype=float)


def build_panel(records: Sequence[PriceRecord]) -> PricePanel:
    """
    Assemble records into a PricePanel sorted by date and ticker.

    Identical duplicates collapse into one cell; a duplicate with a different
    close raises PanelConflictError. Missing trades stay absent (NaN), never 0.
    """
    closes: dict[tuple[str, dt.date], float] = {}
    for record in records:
        key = (record.ticker, record.date)
        previous = closes.get(key)
        if previous is None:
            closes[key] = record.close
        elif previous != record.close:
            raise PanelConflictError(record.ticker, record.date, previous, record.close)

    if not closes:
        return PricePanel(_empty_frame())

    index = pd.MultiIndex.from_tuples(list(closes), names=["ticker", "date"])
    frame = pd.Series(list(closes.values()), index=index, dtype=float).unstack("ticker")
    frame.index = pd.DatetimeIndex(frame.index, name="date")
    frame = frame.sort_index().sort_index(axis=1)
    frame.columns.name = None
    return PricePanel(frame)


@dataclass(frozen=True)
class ValidationReport:
    gaps: dict[str, tuple[str, ...]] = field(default_factory=dict)
    coverage_by_month: dict[str, float] = field(default_factory=dict)
    coverage: float = 0.0


def validate_panel(panel: PricePanel) -> ValidationReport:
    """Per-ticker months without any price, plus coverage overall and per month."""
    frame = panel.frame
    if frame.empty:
        return ValidationReport(gaps={t: () for t in panel.tickers}, coverage=0.0)

    present = frame.notna()
    month_of = frame.index.to_period("M")
    months = pd.period_range(month_of.min(), month_of.max(), freq="M")

    counts = present.groupby(month_of).sum().reindex(months, fill_value=0)
    dates_per_month = pd.Series(1, index=month_of).groupby(level=0).sum().reindex(months, fill_value=0)

    gaps = {
        ticker: tuple(str(m) for m in months if counts.at[m, ticker] == 0)
        for ticker in panel.tickers
    }
    for ticker, missing in gaps.items():
        if missing:
            logger.info("%s has no price in %d month(s): %s", ticker, len(missing), ", ".join(missing))

    n_tickers = len(panel.tickers)
    coverage_by_month = {}
    for m in months:
        cells = n_tickers * int(dates_per_month[m])
        coverage_by_month[str(m)] = float(counts.loc[m].sum()) / cells if cells else 0.0

    coverage = float(present.to_numpy().sum()) / present.size
    return ValidationReport(gaps=gaps, coverage_by_month=coverage_by_month, coverage=coverage)
