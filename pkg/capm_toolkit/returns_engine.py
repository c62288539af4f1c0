"""
Monthly returns from daily prices.

Months are ``pandas.Period`` values with monthly frequency. A monthly price is
the close on the first trading day on or after the 1st; months without any
trade are absent, and an absent month breaks the return chain.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DomainError
from .pricelist_parser import TICKER_RE, PricePanel

logger = logging.getLogger(__name__)

PORTFOLIO = "PORTFOLIO"
MARKET = "MARKET"


def month(label: str) -> pd.Period:
    """``"2007-03"`` -> monthly Period."""
    return pd.Period(label, freq="M")


# ---------- Domain types ----------
@dataclass(frozen=True)
class ReturnSeries:
    """Monthly log returns of one ticker, indexed by month."""

    ticker: str
    values: pd.Series

    @property
    def periods(self) -> list[pd.Period]:
        return list(self.values.index)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ExcessReturnSeries:
    """Returns net of the risk-free rate; ``name`` is a ticker, PORTFOLIO or MARKET."""

    name: str
    values: pd.Series
    constituents: Mapping[pd.Period, tuple[str, ...]] = field(default_factory=dict)

    @property
    def periods(self) -> list[pd.Period]:
        return list(self.values.index)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RiskFreeSeries:
    """Annual effective yields and the de-annualized monthly rate r_ft."""

    annual_yield: pd.Series
    monthly_rate: pd.Series

    @property
    def periods(self) -> list[pd.Period]:
        return list(self.annual_yield.index)

    @classmethod
    def from_annual(cls, annual: Mapping[pd.Period, float] | pd.Series) -> RiskFreeSeries:
        annual = pd.Series(annual, dtype=float)
        annual.index = pd.PeriodIndex(annual.index, freq="M")
        annual = annual.sort_index()
        monthly = annual.map(deannualize)
        return cls(annual_yield=annual, monthly_rate=monthly)


@dataclass(frozen=True)
class DividendEvent:
    ticker: str
    ex_month: pd.Period
    amount: float

    def __post_init__(self):
        if not self.amount >= 0:
            raise DomainError(f"dividend amount must be non-negative, got {self.amount!r}")


@dataclass(frozen=True)
class MonthlyPrices:
    """Month-by-ticker closes, with dividends paid in each month alongside."""

    close: pd.DataFrame
    dividends: pd.DataFrame

    @property
    def tickers(self) -> list[str]:
        return list(self.close.columns)


# ---------- Sampling ----------
def monthly_sample(panel: PricePanel) -> MonthlyPrices:
    """First available close of each month per ticker; empty months stay NaN."""
    frame = panel.frame
    if frame.empty:
        empty = pd.DataFrame(index=pd.PeriodIndex([], freq="M"), columns=frame.columns, dtype=float)
        return MonthlyPrices(close=empty, dividends=empty.copy())

    month_of = frame.index.to_period("M")
    # groupby.first skips NaN per column, giving each ticker's first trading day
    close = frame.groupby(month_of).first()
    close = close.reindex(pd.period_range(month_of.min(), month_of.max(), freq="M"))
    close.index.name = "month"
    dividends = pd.DataFrame(0.0, index=close.index, columns=close.columns)
    return MonthlyPrices(close=close, dividends=dividends)


def sample_index(levels: pd.Series) -> pd.Series:
    """Monthly sample of a daily index level series."""
    frame = levels.to_frame(MARKET)
    return monthly_sample(PricePanel(frame)).close[MARKET]


def dividend_adjust(prices: MonthlyPrices, dividends: Iterable[DividendEvent]) -> MonthlyPrices:
    """
    Attach dividends to their ex-months.

    The return into an ex-month becomes log(P_t + D_t) - log(P_{t-1}); earlier
    prices are left untouched. Unknown tickers and months outside the sample are
    logged and ignored.
    """
    adjusted = prices.dividends.copy()
    for event in dividends:
        if event.ticker not in adjusted.columns:
            logger.warning("dividend for unknown ticker %s ignored", event.ticker)
            continue
        if event.ex_month not in adjusted.index:
            logger.warning("dividend for %s in %s is outside the sample, ignored", event.ticker, event.ex_month)
            continue
        adjusted.at[event.ex_month, event.ticker] += event.amount
    return MonthlyPrices(close=prices.close, dividends=adjusted)


# ---------- Returns ----------
def log_returns(prices: pd.Series, dividends: pd.Series | None = None, ticker: str = "") -> ReturnSeries:
    """
    r_t = ln(P_t + D_t) - ln(P_{t-1}) for consecutive months with both prices present.

    ``prices`` is indexed by monthly Periods; NaN or missing months break the chain.
    """
    ticker = ticker or str(prices.name or "")
    prices = prices.dropna()
    if len(prices) < 2:
        return ReturnSeries(ticker, pd.Series(dtype=float, index=pd.PeriodIndex([], freq="M")))

    full = pd.period_range(prices.index.min(), prices.index.max(), freq="M")
    start = prices.reindex(full)
    end = start.copy()
    if dividends is not None:
        end = end + dividends.reindex(full).fillna(0.0)

    values = (np.log(end) - np.log(start.shift(1))).dropna()
    values.index.name = "month"
    return ReturnSeries(ticker, values.rename(ticker))


def all_log_returns(prices: MonthlyPrices) -> dict[str, ReturnSeries]:
    return {
        ticker: log_returns(prices.close[ticker], prices.dividends[ticker], ticker=ticker)
        for ticker in prices.tickers
    }


def deannualize(annual_yield: float) -> float:
    """Monthly rate equivalent to an annual effective yield: (1+y)^(1/12) - 1."""
    if not annual_yield > -1:
        raise DomainError(f"annual yield must exceed -1, got {annual_yield!r}")
    return math.expm1(math.log1p(annual_yield) / 12.0)


def annualize(monthly_rate: float) -> float:
    """Inverse of deannualize: (1+m)^12 - 1."""
    if not monthly_rate > -1:
        raise DomainError(f"monthly rate must exceed -1, got {monthly_rate!r}")
    return math.expm1(12.0 * math.log1p(monthly_rate))


def excess_returns(returns: ReturnSeries, rf: RiskFreeSeries) -> ExcessReturnSeries:
    """R_it = r_it - r_ft over the months both series share."""
    common = returns.values.index.intersection(rf.monthly_rate.index).sort_values()
    if len(common) == 0:
        logger.warning("%s: no months in common with the risk-free series", returns.ticker)
    values = returns.values.loc[common] - rf.monthly_rate.loc[common]
    return ExcessReturnSeries(returns.ticker, values.rename(returns.ticker))


def market_excess(levels: pd.Series, rf: RiskFreeSeries) -> ExcessReturnSeries:
    """Excess return of the market index, sampled like the stocks."""
    index_returns = log_returns(sample_index(levels), ticker=MARKET)
    return excess_returns(index_returns, rf)


def portfolio_excess(series: Sequence[ExcessReturnSeries]) -> ExcessReturnSeries:
    """
    Equal-weighted portfolio: R_t = sum_i R_it / n_t.

    n_t counts the stocks present in month t; months with none are absent.
    Columns are averaged in ticker order so the input order never matters.
    """
    if not series:
        return ExcessReturnSeries(PORTFOLIO, pd.Series(dtype=float, index=pd.PeriodIndex([], freq="M")))

    ordered = sorted(series, key=lambda s: s.name)
    frame = pd.concat({s.name: s.values for s in ordered}, axis=1).sort_index()
    present = frame.notna()
    counts = present.sum(axis=1)
    frame = frame[counts > 0]
    values = frame.mean(axis=1, skipna=True).rename(PORTFOLIO)
    values.index.name = "month"

    constituents = {
        period: tuple(col for col in frame.columns if present.at[period, col])
        for period in frame.index
    }
    return ExcessReturnSeries(PORTFOLIO, values, constituents)


# ---------- CSV interfaces ----------
def _csv_rows(text: str) -> Iterable[tuple[int, list[str]]]:
    for line_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not cells or not cells[0] or cells[0].startswith("#"):
            continue
        yield line_no, cells


def read_riskfree_csv(text: str) -> RiskFreeSeries:
    """``YYYY-MM,annual_yield`` lines (yield as a fraction)."""
    annual: dict[pd.Period, float] = {}
    for line_no, cells in _csv_rows(text):
        if cells[0].lower() in {"month", "period"}:
            continue
        if len(cells) != 2:
            raise DomainError(f"risk-free line {line_no}: expected YYYY-MM,annual_yield")
        try:
            annual[month(cells[0])] = float(cells[1])
        except ValueError as err:
            raise DomainError(f"risk-free line {line_no}: {err}") from None
    return RiskFreeSeries.from_annual(annual)


def read_dividends_csv(text: str) -> list[DividendEvent]:
    """``TICKER,YYYY-MM,amount`` lines."""
    events = []
    for line_no, cells in _csv_rows(text):
        if cells[0].lower() == "ticker":
            continue
        if len(cells) != 3 or not TICKER_RE.fullmatch(cells[0].upper()):
            raise DomainError(f"dividend line {line_no}: expected TICKER,YYYY-MM,amount")
        try:
            events.append(DividendEvent(cells[0].upper(), month(cells[1]), float(cells[2])))
        except ValueError as err:
            raise DomainError(f"dividend line {line_no}: {err}") from None
    return events


def format_returns_csv(series: Iterable[ReturnSeries | ExcessReturnSeries], header: str = "log_return") -> str:
    """``TICKER,YYYY-MM,value`` rows with 10 significant digits."""
    lines = [f"ticker,month,{header}"]
    for s in series:
        name = s.ticker if isinstance(s, ReturnSeries) else s.name
        for period, value in s.values.items():
            lines.append(f"{name},{period},{value:.10g}")
    return "\n".join(lines) + "\n"
