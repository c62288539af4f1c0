"""Residual and series diagnostics: trend fits, Durbin-Watson, ACF with white-noise bands."""

from __future__ import annotations

import datetime as dt
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .capm_estimator import RegressionResult, ols_simple
from .errors import InsufficientDataError, UndefinedStatisticError

logger = logging.getLogger(__name__)

# ---------- Constants ----------
DW_ALARM_THRESHOLD = 1.0  # below this the OLS standard errors are suspect
BAND_Z = 1.96
WHITE_NOISE_SHARE = 0.05
ZERO_TOL = 1e-12


# ---------- Durbin-Watson ----------
def durbin_watson(residuals: Sequence[float]) -> float:
    """Σ(e_t - e_{t-1})² / Σe_t², always in [0, 4]."""
    e = np.asarray(residuals, dtype=float)
    if e.size < 2:
        raise InsufficientDataError(f"Durbin-Watson needs at least 2 residuals, got {e.size}")
    denom = float(e @ e)
    if denom == 0.0:
        raise UndefinedStatisticError("Durbin-Watson is undefined for all-zero residuals")
    diff = np.diff(e)
    return float(diff @ diff) / denom


def dw_alarm(dw: float) -> bool:
    """Rule of thumb: DW under 1.0 is cause for alarm about OLS inference."""
    return dw < DW_ALARM_THRESHOLD


# ---------- ACF ----------
@dataclass(frozen=True)
class AcfResult:
    lags: tuple[int, ...]
    correlations: tuple[float, ...]
    band: float
    n: int

    def at(self, lag: int) -> float:
        return self.correlations[self.lags.index(lag)]

    def to_csv(self) -> str:
        lines = ["lag,correlation,band"]
        lines += [f"{k},{rho:.10g},{self.band:.10g}" for k, rho in zip(self.lags, self.correlations)]
        return "\n".join(lines) + "\n"


def acf(series: Sequence[float], max_lag: int, include_zero: bool = False) -> AcfResult:
    """
    Biased sample autocorrelation (common mean, divide by n) for lags 1..max_lag.

    ρ_k = Σ_{t=1..n-k}(e_t - ē)(e_{t+k} - ē) / Σ(e_t - ē)²
    """
    e = np.asarray(series, dtype=float)
    n = e.size
    if not 1 <= max_lag < n:
        raise InsufficientDataError(f"need n > max_lag >= 1, got n={n}, max_lag={max_lag}")
    centred = e - e.mean()
    denom = float(centred @ centred)
    if denom == 0.0 or np.all(np.abs(centred) <= ZERO_TOL * float(np.max(np.abs(e)))):
        raise UndefinedStatisticError("autocorrelation is undefined for a constant series")

    lags = range(0 if include_zero else 1, max_lag + 1)
    correlations = tuple(
        1.0 if k == 0 else float(np.clip(centred[:-k] @ centred[k:] / denom, -1.0, 1.0))
        for k in lags
    )
    return AcfResult(lags=tuple(lags), correlations=correlations, band=BAND_Z / math.sqrt(n), n=n)


@dataclass(frozen=True)
class WhiteNoiseCheck:
    exceed_count: int
    is_white: bool


def white_noise_check(result: AcfResult) -> WhiteNoiseCheck:
    """White iff at most ceil(5% of lags) correlations leave the ±1.96/√n band."""
    pairs = [(k, rho) for k, rho in zip(result.lags, result.correlations) if k > 0]
    exceed = sum(1 for _, rho in pairs if abs(rho) > result.band)
    return WhiteNoiseCheck(exceed_count=exceed, is_white=exceed <= math.ceil(WHITE_NOISE_SHARE * len(pairs)))


# ---------- Trend ----------
@dataclass(frozen=True)
class TrendFit:
    result: RegressionResult
    adj_r_squared: float
    start: dt.date | None = None
    end: dt.date | None = None


def trend_regression(index: Sequence[tuple[float, float]]) -> TrendFit:
    """OLS of level on a time index; adj R² = 1 - (1-R²)(n-1)/(n-2)."""
    points = list(index)
    if len(points) < 3:
        raise InsufficientDataError(f"trend regression needs at least 3 points, got {len(points)}")
    t, level = zip(*points)
    result = ols_simple(t, level)
    n = result.n
    adj = 1.0 - (1.0 - result.r_squared) * (n - 1) / (n - 2)
    return TrendFit(result=result, adj_r_squared=adj)


def _dated_trend(levels: pd.Series) -> TrendFit:
    fit = trend_regression(enumerate(levels.to_numpy(float), start=1))
    return TrendFit(fit.result, fit.adj_r_squared, start=levels.index[0].date(), end=levels.index[-1].date())


def split_trend_regression(levels: pd.Series, split_date: dt.date | None = None) -> list[TrendFit]:
    """
    Trend fits on a daily level series, optionally in two regimes.

    The first regime runs through ``split_date`` inclusive, the second starts at
    the next observation. Each regime's time index restarts at 1.
    """
    levels = levels.dropna().sort_index()
    if split_date is None:
        return [_dated_trend(levels)]
    cut = pd.Timestamp(split_date)
    return [_dated_trend(levels[levels.index <= cut]), _dated_trend(levels[levels.index > cut])]
