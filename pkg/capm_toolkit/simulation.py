"""
Synthetic markets with known CAPM parameters.

Data-generating process per month t and stock i::

    R_mt ~ N(market_mean, market_sd²)
    R_it = α_i + β_i·R_mt + ε_it,   ε_it ~ N(0, idio_sd_i²)

Random numbers come from numpy's PCG64 bit generator
(``numpy.random.default_rng(seed)``). Draw order is fixed: the market path
first, then the stock innovations as an (n_stocks, n_months) block. Changing
either breaks every committed fixture.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .capm_estimator import confidence_interval, estimate_portfolio_capm, estimate_stock_capm
from .errors import InvalidSpecError
from .pricelist_parser import PriceRecord, format_decimal, serialize_price_list
from .returns_engine import MARKET, PORTFOLIO, ExcessReturnSeries, deannualize, month, portfolio_excess

logger = logging.getLogger(__name__)

# Tickers of the ten listed companies the default market imitates
USE_TICKERS = ("BATU", "BOBU", "DFCU", "EABL", "JHL", "KA", "KCB", "NVL", "SBU", "UCL")
# Per-stock betas of the same shape as the published monthly estimates
PUBLISHED_BETAS = (0.1168, 0.6305, 0.1796, 1.2645, 0.9597, 1.2629, 1.2782, 0.4137, 0.3629, 0.9216)
MIN_TRIALS = 100


def ticker_names(n: int) -> tuple[str, ...]:
    """USE-style names for up to ten stocks, then SIMAA, SIMAB, ..."""
    if n <= len(USE_TICKERS):
        return USE_TICKERS[:n]
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return tuple(f"SIM{letters[i // 26 % 26]}{letters[i % 26]}" for i in range(n))


def _per_stock(value, n: int, name: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * n
    values = tuple(float(v) for v in value)
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise InvalidSpecError(f"{name} has {len(values)} entries for {n} stocks")
    return values


@dataclass(frozen=True)
class SimulationSpec:
    """Ground truth for one synthetic market; ``n_months`` counts return months."""

    n_stocks: int = 10
    n_months: int = 32
    true_betas: tuple[float, ...] = PUBLISHED_BETAS
    true_alphas: tuple[float, ...] = (0.0,)
    market_mean: float = 0.0
    market_sd: float = 0.05
    idio_sd: tuple[float, ...] = (0.04,)
    rf_annual: float = 0.10
    seed: int = 42
    start_month: str = "2007-03"

    def __post_init__(self):
        if int(self.n_stocks) < 1:
            raise InvalidSpecError(f"n_stocks must be >= 1, got {self.n_stocks}")
        if int(self.n_months) < 3:
            raise InvalidSpecError(f"n_months must be >= 3, got {self.n_months}")
        if not self.market_sd > 0:
            raise InvalidSpecError(f"market_sd must be positive, got {self.market_sd}")
        if not self.rf_annual > -1:
            raise InvalidSpecError(f"rf_annual must exceed -1, got {self.rf_annual}")
        n = int(self.n_stocks)
        if self.true_betas == PUBLISHED_BETAS and n != len(PUBLISHED_BETAS):
            object.__setattr__(self, "true_betas", tuple(PUBLISHED_BETAS[i % len(PUBLISHED_BETAS)] for i in range(n)))
        # normalise to one entry per stock; frozen, so go through object.__setattr__
        object.__setattr__(self, "true_betas", _per_stock(self.true_betas, n, "true_betas"))
        object.__setattr__(self, "true_alphas", _per_stock(self.true_alphas, n, "true_alphas"))
        object.__setattr__(self, "idio_sd", _per_stock(self.idio_sd, n, "idio_sd"))
        if any(sd < 0 for sd in self.idio_sd):
            raise InvalidSpecError("idio_sd must be non-negative")
        try:
            month(self.start_month)
        except ValueError:
            raise InvalidSpecError(f"start_month must be YYYY-MM, got {self.start_month!r}") from None

    @classmethod
    def from_mapping(cls, data: Mapping) -> SimulationSpec:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidSpecError(f"unknown spec field(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> SimulationSpec:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise InvalidSpecError(f"spec is not valid JSON: {err}") from None
        if not isinstance(data, dict):
            raise InvalidSpecError("spec must be a JSON object")
        return cls.from_mapping(data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def with_seed(self, seed: int) -> SimulationSpec:
        return SimulationSpec(**{**asdict(self), "seed": seed})

    @property
    def tickers(self) -> tuple[str, ...]:
        return ticker_names(self.n_stocks)

    @property
    def rf_monthly(self) -> float:
        return deannualize(self.rf_annual)

    @property
    def return_months(self) -> pd.PeriodIndex:
        """Months ending each return period; prices start one month earlier."""
        return pd.period_range(month(self.start_month) + 1, periods=self.n_months, freq="M")


# ---------- Generators ----------
def generate_market(spec: SimulationSpec) -> tuple[ExcessReturnSeries, list[ExcessReturnSeries]]:
    """Market excess returns and one excess-return series per stock."""
    rng = np.random.default_rng(spec.seed)
    market = spec.market_mean + spec.market_sd * rng.standard_normal(spec.n_months)
    shocks = rng.standard_normal((spec.n_stocks, spec.n_months))

    months = spec.return_months
    market_series = ExcessReturnSeries(MARKET, pd.Series(market, index=months, name=MARKET))
    stocks = []
    for i, ticker in enumerate(spec.tickers):
        values = spec.true_alphas[i] + spec.true_betas[i] * market + spec.idio_sd[i] * shocks[i]
        stocks.append(ExcessReturnSeries(ticker, pd.Series(values, index=months, name=ticker)))
    return market_series, stocks


def _trading_days(period: pd.Period) -> pd.DatetimeIndex:
    return pd.bdate_range(period.start_time, period.end_time.normalize())


def generate_pricelist(spec: SimulationSpec, base_prices: Sequence[float] | float = 1000.0) -> str:
    """
    Daily price list whose monthly log returns are r_it = R_it + r_f.

    Every business day of a month quotes that month's price, so the first
    trading day carries P_t = P_{t-1}·exp(r_it).
    """
    bases = _per_stock(base_prices, spec.n_stocks, "base_prices")
    if any(p <= 0 for p in bases):
        raise InvalidSpecError("base prices must be positive")
    _, stocks = generate_market(spec)
    volume_rng = np.random.default_rng([spec.seed, 1])
    price_months = pd.period_range(month(spec.start_month), periods=spec.n_months + 1, freq="M")

    records = []
    for base, stock in zip(bases, stocks):
        raw = stock.values.to_numpy() + spec.rf_monthly
        # compound step by step so each price is exactly P_{t-1}·exp(r_t)
        prices = np.empty(len(raw) + 1)
        prices[0] = base
        for t, r in enumerate(raw, start=1):
            prices[t] = prices[t - 1] * math.exp(r)
        for period, price in zip(price_months, prices):
            days = _trading_days(period)
            volumes = volume_rng.integers(0, 5000, size=len(days))
            for day, volume in zip(days, volumes):
                records.append(PriceRecord(stock.name, day.date(), float(price), int(volume)))
    return serialize_price_list(records)


def generate_index_levels(spec: SimulationSpec, base_level: float = 800.0) -> str:
    """Daily ``YYYY-MM-DD,level`` lines whose monthly log returns are R_mt + r_f."""
    market, _ = generate_market(spec)
    raw = market.values.to_numpy() + spec.rf_monthly
    price_months = pd.period_range(month(spec.start_month), periods=spec.n_months + 1, freq="M")
    level = base_level
    lines = ["date,level"]
    for t, period in enumerate(price_months):
        if t:
            level = level * math.exp(raw[t - 1])
        lines += [f"{day.date().isoformat()},{format_decimal(level)}" for day in _trading_days(period)]
    return "\n".join(lines) + "\n"


def generate_riskfree_csv(spec: SimulationSpec) -> str:
    """Constant annual yield for every return month."""
    lines = ["month,annual_yield"]
    lines += [f"{period},{format_decimal(spec.rf_annual)}" for period in spec.return_months]
    return "\n".join(lines) + "\n"


# ---------- Recovery ----------
@dataclass(frozen=True)
class ParameterRecovery:
    name: str
    truth: float
    coverage: float
    bias: float
    mean_se: float
    sampling_sd: float


@dataclass(frozen=True)
class RecoveryReport:
    trials: int
    level: float
    parameters: tuple[ParameterRecovery, ...] = field(default_factory=tuple)

    def get(self, name: str) -> ParameterRecovery:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(name)


def _run_trial(spec: SimulationSpec, level: float) -> dict[str, tuple[float, float, bool]]:
    """Estimate, SE and CI-hit per parameter for one simulated market."""
    market, stocks = generate_market(spec)
    out = {}
    fits = [(s.name, estimate_stock_capm(s, market)) for s in stocks]
    fits.append((PORTFOLIO, estimate_portfolio_capm(portfolio_excess(stocks), market)))
    truths = _truths(spec)
    for name, result in fits:
        for param, attr in (("beta", "slope"), ("alpha", "intercept")):
            key = f"{param}[{name}]"
            lo, hi = confidence_interval(result, attr, level)
            out[key] = (getattr(result, attr), getattr(result, f"se_{attr}"), lo <= truths[key] <= hi)
    return out


def _truths(spec: SimulationSpec) -> dict[str, float]:
    truths = {}
    for i, ticker in enumerate(spec.tickers):
        truths[f"beta[{ticker}]"] = spec.true_betas[i]
        truths[f"alpha[{ticker}]"] = spec.true_alphas[i]
    truths[f"beta[{PORTFOLIO}]"] = float(np.mean(spec.true_betas))
    truths[f"alpha[{PORTFOLIO}]"] = float(np.mean(spec.true_alphas))
    return truths


def recovery_experiment(
    spec: SimulationSpec, trials: int = 1000, level: float = 0.95, workers: int | None = None
) -> RecoveryReport:
    """
    Monte-Carlo check of the estimator: CI coverage, bias and spread per parameter.

    Trial k uses seed ``spec.seed + k`` so results do not depend on ``workers``.
    """
    if trials < MIN_TRIALS:
        raise InvalidSpecError(f"recovery needs at least {MIN_TRIALS} trials, got {trials}")
    specs = [spec.with_seed(spec.seed + k) for k in range(trials)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda s: _run_trial(s, level), specs))
    else:
        outcomes = [_run_trial(s, level) for s in specs]

    parameters = []
    for name, truth in _truths(spec).items():
        estimates = np.array([o[name][0] for o in outcomes])
        ses = np.array([o[name][1] for o in outcomes])
        hits = np.array([o[name][2] for o in outcomes])
        parameters.append(
            ParameterRecovery(
                name=name,
                truth=truth,
                coverage=float(hits.mean()),
                bias=float(estimates.mean() - truth),
                mean_se=float(ses.mean()),
                sampling_sd=float(estimates.std(ddof=1)),
            )
        )
    logger.info("recovery: %d trials, %d parameters", trials, len(parameters))
    return RecoveryReport(trials=trials, level=level, parameters=tuple(parameters))
