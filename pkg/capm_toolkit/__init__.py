"""USE CAPM toolkit: price-list ingestion, monthly returns, CAPM regressions and diagnostics."""

from .capm_estimator import (
    CapmEstimate,
    CapmPrediction,
    HypothesisOutcome,
    RegressionResult,
    estimate_portfolio_capm,
    estimate_stock_capm,
    hypothesis_test,
    ols_simple,
    sharpe_lintner_prediction,
    student_t_sf,
)
from .diagnostics import AcfResult, TrendFit, acf, durbin_watson, trend_regression, white_noise_check
from .pricelist_parser import PricePanel, PriceRecord, ParseReport, build_panel, parse_price_list, validate_panel
from .returns_engine import (
    DividendEvent,
    ExcessReturnSeries,
    ReturnSeries,
    RiskFreeSeries,
    deannualize,
    dividend_adjust,
    excess_returns,
    log_returns,
    monthly_sample,
    portfolio_excess,
)
from .simulation import RecoveryReport, SimulationSpec, generate_market, generate_pricelist, recovery_experiment

__version__ = "0.1.0"
