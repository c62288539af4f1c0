"""End-to-end wiring: files -> panel -> returns -> CAPM fits -> diagnostics."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .capm_estimator import (
    CapmEstimate,
    align_excess,
    assess_capm,
    estimate_portfolio_capm,
    estimate_stock_capm,
    verify_fit,
)
from .config import RunConfig
from .diagnostics import (
    AcfResult,
    TrendFit,
    WhiteNoiseCheck,
    acf,
    durbin_watson,
    dw_alarm,
    split_trend_regression,
    white_noise_check,
)
from .errors import DegenerateRegressorError, EmptyOverlapError, InsufficientDataError, UndefinedStatisticError
from .pricelist_parser import ParseReport, PricePanel, build_panel, parse_index_levels, parse_price_list
from .returns_engine import (
    DividendEvent,
    ExcessReturnSeries,
    MonthlyPrices,
    ReturnSeries,
    RiskFreeSeries,
    all_log_returns,
    dividend_adjust,
    excess_returns,
    log_returns,
    market_excess,
    monthly_sample,
    portfolio_excess,
    read_dividends_csv,
    read_riskfree_csv,
    sample_index,
)

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-10
EXACT_FIT_TOL = 1e-9


def read_input(path: Path | None, flag: str) -> str:
    """UTF-8 text of a required input; FileNotFoundError names the path."""
    if path is None:
        raise FileNotFoundError(2, "missing required input", flag)
    if not path.is_file():
        raise FileNotFoundError(2, "no such file", str(path))
    return path.read_text(encoding="utf-8")


# ---------- Inputs ----------
@dataclass(frozen=True)
class Inputs:
    panel: PricePanel
    parse_report: ParseReport
    index_levels: pd.Series | None = None
    riskfree: RiskFreeSeries | None = None
    dividends: tuple[DividendEvent, ...] = ()


def _window_levels(levels: pd.Series, config: RunConfig) -> pd.Series:
    if config.date_from is not None:
        levels = levels[levels.index >= pd.Timestamp(config.date_from)]
    if config.date_to is not None:
        levels = levels[levels.index <= pd.Timestamp(config.date_to)]
    return levels


def load_panel(config: RunConfig) -> tuple[PricePanel, ParseReport]:
    records, report = parse_price_list(read_input(config.input_path, "--input"), strict=config.strict)
    panel = build_panel(records).window(config.date_from, config.date_to)
    logger.info("parsed %d records into %d tickers x %d dates", report.accepted, len(panel.tickers), len(panel.dates))
    return panel, report


def load_inputs(
    config: RunConfig,
    need_market: bool = True,
    parsed: tuple[PricePanel, ParseReport] | None = None,
) -> Inputs:
    """Read every input named in ``config``; ``parsed`` reuses an already parsed price list."""
    panel, report = parsed if parsed is not None else load_panel(config)
    index_levels = riskfree = None
    if need_market or config.index_path is not None:
        index_levels = _window_levels(parse_index_levels(read_input(config.index_path, "--index")), config)
    if need_market or config.riskfree_path is not None:
        riskfree = read_riskfree_csv(read_input(config.riskfree_path, "--riskfree"))
    dividends = ()
    if config.dividends_path is not None:
        dividends = tuple(read_dividends_csv(read_input(config.dividends_path, "--dividends")))
    return Inputs(panel, report, index_levels, riskfree, dividends)


# ---------- Returns ----------
@dataclass(frozen=True)
class ReturnsBundle:
    prices: MonthlyPrices
    returns: dict[str, ReturnSeries]
    market_returns: ReturnSeries | None = None
    stocks: tuple[ExcessReturnSeries, ...] = ()
    market: ExcessReturnSeries | None = None
    portfolio: ExcessReturnSeries | None = None


def build_returns(inputs: Inputs) -> ReturnsBundle:
    prices = dividend_adjust(monthly_sample(inputs.panel), inputs.dividends)
    returns = all_log_returns(prices)
    market_returns = None
    if inputs.index_levels is not None:
        market_returns = log_returns(sample_index(inputs.index_levels), ticker="MARKET")
    if inputs.riskfree is None:
        return ReturnsBundle(prices, returns, market_returns)

    stocks = tuple(excess_returns(returns[t], inputs.riskfree) for t in sorted(returns))
    market = market_excess(inputs.index_levels, inputs.riskfree) if inputs.index_levels is not None else None
    portfolio = portfolio_excess([s for s in stocks if len(s)])
    return ReturnsBundle(prices, returns, market_returns, stocks, market, portfolio)


# ---------- Estimation ----------
@dataclass(frozen=True)
class EstimationRun:
    stocks: tuple[CapmEstimate, ...]
    portfolio: CapmEstimate
    market: ExcessReturnSeries


def _fit_stock(stock: ExcessReturnSeries, market: ExcessReturnSeries, levels) -> CapmEstimate | None:
    try:
        return assess_capm(stock.name, estimate_stock_capm(stock, market), levels)
    except (InsufficientDataError, DegenerateRegressorError, EmptyOverlapError) as err:
        logger.warning("%s skipped: %s", stock.name, err)
        return None


def _verify(estimate: CapmEstimate, series: ExcessReturnSeries, market: ExcessReturnSeries) -> None:
    x, y = align_excess(series, market)
    gap = verify_fit(estimate.result, x, y)
    if gap > ORACLE_TOLERANCE:
        logger.warning("%s: fit deviates from the normal-equation oracle by %.3g", estimate.name, gap)
    else:
        logger.debug("%s: oracle gap %.3g", estimate.name, gap)


def run_estimation(bundle: ReturnsBundle, config: RunConfig) -> EstimationRun:
    """Per-stock and portfolio CAPM fits; stocks fan out over ``config.workers`` threads."""
    market, portfolio = bundle.market, bundle.portfolio
    if market is None or portfolio is None or len(market) == 0 or len(portfolio) == 0:
        raise EmptyOverlapError("no market or portfolio excess returns in the selected window")

    stocks = list(bundle.stocks)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            fitted = list(pool.map(lambda s: _fit_stock(s, market, config.levels), stocks))
    else:
        fitted = [_fit_stock(s, market, config.levels) for s in stocks]

    try:
        portfolio_fit = assess_capm("PORTFOLIO", estimate_portfolio_capm(portfolio, market), config.levels)
    except InsufficientDataError as err:
        raise EmptyOverlapError(f"portfolio and market overlap too short: {err}") from None

    if config.verify:
        for estimate, series in zip(fitted, stocks):
            if estimate is not None:
                _verify(estimate, series, market)
        _verify(portfolio_fit, portfolio, market)

    estimates = tuple(e for e in fitted if e is not None)
    logger.info("estimated %d stock regressions and the portfolio (n=%d)", len(estimates), portfolio_fit.result.n)
    return EstimationRun(stocks=estimates, portfolio=portfolio_fit, market=market)


# ---------- Diagnostics ----------
@dataclass(frozen=True)
class ResidualDiagnostics:
    name: str
    durbin_watson: float | None
    lag1: float | None
    alarm: bool
    acf: AcfResult | None
    white: WhiteNoiseCheck | None
    note: str = ""


def residual_diagnostics(name: str, residuals, max_lag: int, scale: float = 0.0) -> ResidualDiagnostics:
    """
    DW, ACF and white-noise judgment; degenerate cases become notes, not errors.

    Residuals no larger than ``EXACT_FIT_TOL * scale`` (scale = largest |y| of the fit)
    are round-off from an exact fit and are treated as zero.
    """
    e = np.asarray(residuals, dtype=float)
    if scale > 0 and e.size and float(np.max(np.abs(e))) <= EXACT_FIT_TOL * scale:
        e = np.zeros_like(e)

    notes = []
    try:
        dw = durbin_watson(e)
    except (UndefinedStatisticError, InsufficientDataError) as err:
        logger.warning("%s: %s", name, err)
        dw, notes = None, [f"Durbin-Watson undefined: {err}"]

    result = white = None
    try:
        result = acf(e, max_lag)
        white = white_noise_check(result)
    except (UndefinedStatisticError, InsufficientDataError) as err:
        logger.warning("%s: %s", name, err)
        notes.append(f"ACF undefined: {err}")

    alarm = dw is not None and dw_alarm(dw)
    if alarm:
        logger.warning("%s: Durbin-Watson %.3f below 1.0, OLS standard errors may be biased", name, dw)
        notes.append("Durbin-Watson below 1.0")
    lag1 = result.at(1) if result is not None else None
    return ResidualDiagnostics(name, dw, lag1, alarm, result, white, "; ".join(notes))


def trend_names(count: int) -> list[str]:
    return ["trend"] if count == 1 else ["trend_before", "trend_after"]


@dataclass(frozen=True)
class DiagnosticsRun:
    residuals: tuple[ResidualDiagnostics, ...]
    trends: tuple[TrendFit, ...] = ()


def run_diagnostics(estimation: EstimationRun, inputs: Inputs, config: RunConfig) -> DiagnosticsRun:
    """Residual checks for every CAPM fit and for each regime of the index trend."""
    residuals = [
        residual_diagnostics(e.name, e.result.residuals, config.max_lag, scale=e.result.y_scale)
        for e in (*estimation.stocks, estimation.portfolio)
    ]
    trends: tuple[TrendFit, ...] = ()
    if inputs.index_levels is not None and len(inputs.index_levels):
        try:
            trends = tuple(split_trend_regression(inputs.index_levels, config.split_date))
        except (InsufficientDataError, DegenerateRegressorError) as err:
            logger.warning("trend regression skipped: %s", err)
    residuals += [
        residual_diagnostics(name, fit.result.residuals, config.max_lag, scale=fit.result.y_scale)
        for name, fit in zip(trend_names(len(trends)), trends)
    ]
    return DiagnosticsRun(residuals=tuple(residuals), trends=trends)
