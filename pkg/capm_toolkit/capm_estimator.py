"""
CAPM estimation by simple OLS.

Per stock:      R_it = γ0 + β_i·R_mt + ε_it
Portfolio:      R_t  = ψ0 + β·R_mt + ε

Inference is classical OLS with n-2 degrees of freedom; p-values come from the
Student-t tail evaluated through the regularized incomplete beta function.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from mpmath import mp
from scipy import special

from .errors import (
    DegenerateRegressorError,
    DomainError,
    EmptyOverlapError,
    InsufficientDataError,
)
from .returns_engine import ExcessReturnSeries

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = (0.01, 0.05, 0.10)
ZERO_BETA = "zero_beta_nonzero"
PRICE_OF_RISK = "positive_price_of_risk"
ORACLE_DIGITS = 50


# ---------- Student t ----------
def student_t_sf(t: float, df: float) -> float:
    """P(T >= t) for Student t with ``df`` degrees of freedom."""
    if not df >= 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df!r}")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    # P(|T| >= |t|) = I_{df/(df+t²)}(df/2, 1/2)
    tail = 0.5 * float(special.betainc(0.5 * df, 0.5, df / (df + t * t)))
    return tail if t >= 0 else 1.0 - tail


def student_t_sf_precise(t: float, df: float, digits: int = ORACLE_DIGITS) -> float:
    """Same tail as student_t_sf, evaluated with mpmath at ``digits`` precision."""
    if not df >= 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df!r}")
    with mp.workdps(digits):
        t_mp, df_mp = mp.mpf(t), mp.mpf(df)
        x = df_mp / (df_mp + t_mp**2)
        tail = mp.betainc(df_mp / 2, mp.mpf(1) / 2, 0, x, regularized=True) / 2
        return float(tail if t >= 0 else 1 - tail)


def _ratio(estimate: float, se: float) -> float:
    if se > 0:
        return estimate / se
    return math.copysign(math.inf, estimate) if estimate != 0 else math.nan


def _two_sided(t: float, df: int) -> float:
    return math.nan if math.isnan(t) else min(1.0, 2.0 * student_t_sf(abs(t), df))


# ---------- OLS ----------
@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    se_slope: float
    se_intercept: float
    t_slope: float
    t_intercept: float
    p_slope_two_sided: float
    p_intercept_two_sided: float
    r_squared: float
    n: int
    residuals: tuple[float, ...] = field(repr=False)
    y_scale: float = 0.0  # largest |y|

    @property
    def df(self) -> int:
        return self.n - 2


def ols_simple(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    """Least-squares fit of y = a + b·x with classical standard errors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InsufficientDataError(f"x and y must be 1-d and the same length, got {x.shape} and {y.shape}")
    n = x.size
    if n < 3:
        raise InsufficientDataError(f"OLS needs at least 3 observations, got {n}")
    if np.ptp(x) == 0:
        raise DegenerateRegressorError("regressor is constant; slope is undefined")

    x_bar, y_bar = x.mean(), y.mean()
    dx, dy = x - x_bar, y - y_bar
    sxx = float(dx @ dx)
    sxy = float(dx @ dy)
    syy = float(dy @ dy)

    slope = sxy / sxx
    intercept = float(y_bar - slope * x_bar)
    residuals = y - intercept - slope * x

    df = n - 2
    sse = float(residuals @ residuals)
    sigma2 = sse / df
    se_slope = math.sqrt(sigma2 / sxx)
    se_intercept = math.sqrt(sigma2 * (1.0 / n + x_bar * x_bar / sxx))
    # constant y: nothing to explain, reported as 0
    r_squared = min(1.0, max(0.0, 1.0 - sse / syy)) if syy > 0 else 0.0

    t_slope = _ratio(slope, se_slope)
    t_intercept = _ratio(intercept, se_intercept)
    return RegressionResult(
        slope=slope,
        intercept=intercept,
        se_slope=se_slope,
        se_intercept=se_intercept,
        t_slope=t_slope,
        t_intercept=t_intercept,
        p_slope_two_sided=_two_sided(t_slope, df),
        p_intercept_two_sided=_two_sided(t_intercept, df),
        r_squared=r_squared,
        n=n,
        residuals=tuple(float(e) for e in residuals),
        y_scale=float(np.max(np.abs(y))),
    )


def normal_equations_oracle(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """
    (intercept, slope, r²) from the raw normal equations at 50 digits.

        [ n   Σx  ] [a]   [ Σy  ]
        [ Σx  Σx² ] [b] = [ Σxy ]
    """
    with mp.workdps(ORACLE_DIGITS):
        xs = [mp.mpf(float(v)) for v in x]
        ys = [mp.mpf(float(v)) for v in y]
        n = len(xs)
        sx, sy = mp.fsum(xs), mp.fsum(ys)
        sxx = mp.fsum(v * v for v in xs)
        sxy = mp.fsum(a * b for a, b in zip(xs, ys))
        solution = mp.lu_solve(mp.matrix([[n, sx], [sx, sxx]]), mp.matrix([sy, sxy]))
        a, b = solution[0], solution[1]
        y_bar = sy / n
        sse = mp.fsum((yi - a - b * xi) ** 2 for xi, yi in zip(xs, ys))
        sst = mp.fsum((yi - y_bar) ** 2 for yi in ys)
        r2 = 1 - sse / sst if sst > 0 else mp.mpf(0)
        return float(a), float(b), float(r2)


def verify_fit(result: RegressionResult, x: Sequence[float], y: Sequence[float]) -> float:
    """Largest absolute gap between a fast fit and the high-precision oracle."""
    intercept, slope, r2 = normal_equations_oracle(x, y)
    return max(
        abs(result.intercept - intercept),
        abs(result.slope - slope),
        abs(result.r_squared - r2),
    )


def confidence_interval(result: RegressionResult, parameter: str = "slope", level: float = 0.95) -> tuple[float, float]:
    """Two-sided t interval for ``slope`` or ``intercept``."""
    if not 0 < level < 1:
        raise DomainError(f"confidence level must lie in (0, 1), got {level!r}")
    estimate = getattr(result, parameter)
    se = getattr(result, f"se_{parameter}")
    half = float(special.stdtrit(result.df, 0.5 + level / 2)) * se
    return estimate - half, estimate + half


# ---------- CAPM regressions ----------
def align_excess(y: ExcessReturnSeries, x: ExcessReturnSeries) -> tuple[np.ndarray, np.ndarray]:
    common = y.values.index.intersection(x.values.index).sort_values()
    if len(common) == 0:
        raise EmptyOverlapError(f"{y.name} and {x.name} share no months")
    return x.values.loc[common].to_numpy(float), y.values.loc[common].to_numpy(float)


def estimate_stock_capm(stock: ExcessReturnSeries, market: ExcessReturnSeries) -> RegressionResult:
    """Regress stock excess returns on market excess returns over common months."""
    x, y = align_excess(stock, market)
    return ols_simple(x, y)


def estimate_portfolio_capm(portfolio: ExcessReturnSeries, market: ExcessReturnSeries) -> RegressionResult:
    """Regress the portfolio's excess returns on market excess returns."""
    x, y = align_excess(portfolio, market)
    return ols_simple(x, y)


# ---------- Hypotheses ----------
@dataclass(frozen=True)
class HypothesisOutcome:
    name: str
    t_value: float
    df: int
    p_value: float
    rejected_at: frozenset[float]


def hypothesis_test(
    result: RegressionResult, which: str, levels: Iterable[float] = DEFAULT_LEVELS
) -> HypothesisOutcome:
    """
    ``zero_beta_nonzero``: two-sided test of the intercept against 0.
    ``positive_price_of_risk``: one-sided (upper tail) test of β > 0.
    """
    df = result.df
    if which == ZERO_BETA:
        t = result.t_intercept
        p = _two_sided(t, df)
    elif which == PRICE_OF_RISK:
        t = result.t_slope
        p = math.nan if math.isnan(t) else student_t_sf(t, df)
    else:
        raise DomainError(f"unknown hypothesis {which!r}")

    rejected = frozenset(level for level in levels if not math.isnan(p) and p < level)
    return HypothesisOutcome(name=which, t_value=t, df=df, p_value=p, rejected_at=rejected)


class CapmVerdict(str, Enum):
    SHARPE_LINTNER = "beta significant, zero-beta rate not different from zero: traditional CAPM holds"
    ZERO_BETA = "beta significant and zero-beta rate nonzero: zero-beta CAPM form"
    NO_PRICE_OF_RISK = "beta not significantly positive: no evidence of a positive price of risk"


@dataclass(frozen=True)
class CapmEstimate:
    """A regression read as (β, zero-beta rate) together with both tests."""

    name: str
    result: RegressionResult
    zero_beta: HypothesisOutcome
    price_of_risk: HypothesisOutcome

    @property
    def beta(self) -> float:
        return self.result.slope

    @property
    def zero_beta_rate(self) -> float:
        return self.result.intercept


def assess_capm(name: str, result: RegressionResult, levels: Iterable[float] = DEFAULT_LEVELS) -> CapmEstimate:
    levels = tuple(levels)
    return CapmEstimate(
        name=name,
        result=result,
        zero_beta=hypothesis_test(result, ZERO_BETA, levels),
        price_of_risk=hypothesis_test(result, PRICE_OF_RISK, levels),
    )


def capm_verdict(estimate: CapmEstimate, level: float = 0.05) -> CapmVerdict:
    if not estimate.price_of_risk.p_value < level:
        return CapmVerdict.NO_PRICE_OF_RISK
    if estimate.zero_beta.p_value < level:
        return CapmVerdict.ZERO_BETA
    return CapmVerdict.SHARPE_LINTNER


def count_significant(estimates: Iterable[CapmEstimate], hypothesis: str, level: float) -> int:
    """How many estimates reject ``hypothesis`` at ``level``."""
    attr = "zero_beta" if hypothesis == ZERO_BETA else "price_of_risk"
    return sum(1 for e in estimates if getattr(e, attr).p_value < level)


# ---------- Sharpe-Lintner ----------
@dataclass(frozen=True)
class CapmPrediction:
    mu_v: float
    r_f: float
    mu_m: float
    beta_v: float


def sharpe_lintner_prediction(r_f: float, mu_m: float, beta_v: float) -> CapmPrediction:
    """μ_v = r_f + (μ_m - r_f)·β_v"""
    return CapmPrediction(mu_v=r_f + (mu_m - r_f) * beta_v, r_f=r_f, mu_m=mu_m, beta_v=beta_v)
