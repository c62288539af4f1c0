"""
Output tables in the published shapes, written as CSV or JSON.

Numbers are rounded once, in the table, so a CSV and a JSON file from the same
run carry identical values.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .capm_estimator import CapmEstimate, capm_verdict
from .diagnostics import AcfResult, TrendFit
from .pipeline import ResidualDiagnostics, trend_names
from .pricelist_parser import ParseReport, ValidationReport
from .returns_engine import ExcessReturnSeries, ReturnSeries
from .simulation import RecoveryReport

FIXED = ".4f"
SIGNIFICANT = ".10g"

STOCK_BETA_COLUMNS = ("Stock Name", "Estimated Beta", "t-value", "Std. Error", "R-squared")
STOCK_ZERO_BETA_COLUMNS = ("Stock Name", "Estimated zero beta", "t-value", "Std. Error", "p-value")
PORTFOLIO_BETA_COLUMNS = ("Estimated Beta", "t-value", "Std. Error", "R-squared")
PORTFOLIO_ZERO_BETA_COLUMNS = ("Est.zero beta rate", "t-value", "Std. Error")
TREND_COLUMNS = ("", "Estimate", "Std. Error", "t value", "Pr(>|t|)")


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    number_format: str = FIXED

    def _cell(self, value):
        """Rounded float, or None for NaN/inf."""
        if isinstance(value, bool) or not isinstance(value, float):
            return value
        if not math.isfinite(value):
            return None
        return float(format(value, self.number_format))

    def _text(self, value) -> str:
        if value is None:
            return "NA"
        if isinstance(value, float):
            return format(value, self.number_format)
        if isinstance(value, bool):
            return "yes" if value else "no"
        return str(value)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([self._text(self._cell(v)) for v in row])
        return buffer.getvalue()

    def to_json(self) -> str:
        records = [dict(zip(self.columns, (self._cell(v) for v in row))) for row in self.rows]
        return json.dumps(records, indent=2, ensure_ascii=False) + "\n"

    def write(self, out_dir: Path, fmt: str) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{self.name}.{fmt}"
        path.write_text(self.to_csv() if fmt == "csv" else self.to_json(), encoding="utf-8")
        return path


def write_tables(tables: Iterable[Table], out_dir: Path, fmt: str) -> list[Path]:
    return [table.write(out_dir, fmt) for table in tables]


# ---------- Parsing ----------
def parse_tables(report: ParseReport, validation: ValidationReport) -> list[Table]:
    summary = Table(
        "parse_summary",
        ("Accepted", "Rejected", "Duplicates", "Coverage"),
        [(report.accepted, len(report.rejected), len(report.duplicates), validation.coverage)],
    )
    rejected = Table("parse_rejected", ("Line", "Reason"), [tuple(r) for r in report.rejected])
    duplicates = Table(
        "parse_duplicates", ("Ticker", "Date"), [(t, d.isoformat()) for t, d in report.duplicates]
    )
    gaps = Table(
        "panel_gaps",
        ("Ticker", "Missing months"),
        [(t, " ".join(months)) for t, months in sorted(validation.gaps.items()) if months],
    )
    coverage = Table(
        "panel_coverage", ("Month", "Coverage"), sorted(validation.coverage_by_month.items())
    )
    return [summary, rejected, duplicates, gaps, coverage]


# ---------- Returns ----------
def returns_table(name: str, series: Iterable[ReturnSeries | ExcessReturnSeries], value_column: str) -> Table:
    rows = []
    for s in series:
        label = s.ticker if isinstance(s, ReturnSeries) else s.name
        rows += [(label, str(period), float(v)) for period, v in s.values.items()]
    return Table(name, ("Ticker", "Month", value_column), rows, number_format=SIGNIFICANT)


def portfolio_composition_table(portfolio: ExcessReturnSeries) -> Table:
    rows = [(str(p), len(names), " ".join(names)) for p, names in sorted(portfolio.constituents.items())]
    return Table("portfolio_composition", ("Month", "Stocks", "Tickers"), rows)


# ---------- Estimation ----------
def stock_beta_table(estimates: Sequence[CapmEstimate]) -> Table:
    rows = [
        (e.name, e.result.slope, e.result.t_slope, e.result.se_slope, e.result.r_squared)
        for e in estimates
    ]
    return Table("stock_betas", STOCK_BETA_COLUMNS, rows)


def stock_zero_beta_table(estimates: Sequence[CapmEstimate]) -> Table:
    rows = [
        (e.name, e.result.intercept, e.result.t_intercept, e.result.se_intercept, e.result.p_intercept_two_sided)
        for e in estimates
    ]
    return Table("stock_zero_beta", STOCK_ZERO_BETA_COLUMNS, rows)


def portfolio_beta_table(estimate: CapmEstimate) -> Table:
    r = estimate.result
    return Table("portfolio_beta", PORTFOLIO_BETA_COLUMNS, [(r.slope, r.t_slope, r.se_slope, r.r_squared)])


def portfolio_zero_beta_table(estimate: CapmEstimate) -> Table:
    r = estimate.result
    return Table("portfolio_zero_beta", PORTFOLIO_ZERO_BETA_COLUMNS, [(r.intercept, r.t_intercept, r.se_intercept)])


def _levels_text(levels: Iterable[float]) -> str:
    return " ".join(f"{round(level * 100)}%" for level in sorted(levels)) or "none"


def hypothesis_table(estimates: Sequence[CapmEstimate]) -> Table:
    rows = []
    for e in estimates:
        for outcome in (e.zero_beta, e.price_of_risk):
            rows.append((e.name, outcome.name, outcome.t_value, outcome.df, outcome.p_value, _levels_text(outcome.rejected_at)))
    return Table("hypotheses", ("Regression", "Hypothesis", "t-value", "df", "p-value", "Rejected at"), rows)


def verdict_table(estimates: Sequence[CapmEstimate], level: float) -> Table:
    rows = [(e.name, capm_verdict(e, level).value) for e in estimates]
    return Table("verdicts", ("Regression", "Verdict"), rows)


def estimation_tables(stocks: Sequence[CapmEstimate], portfolio: CapmEstimate, levels: Sequence[float]) -> list[Table]:
    everything = [*stocks, portfolio]
    verdict_level = 0.05 if 0.05 in levels else max(levels)
    return [
        stock_beta_table(stocks),
        stock_zero_beta_table(stocks),
        portfolio_beta_table(portfolio),
        portfolio_zero_beta_table(portfolio),
        hypothesis_table(everything),
        verdict_table(everything, verdict_level),
    ]


# ---------- Diagnostics ----------
def durbin_watson_table(diagnostics: Sequence[ResidualDiagnostics]) -> Table:
    rows = [
        (d.name, d.durbin_watson, d.lag1, d.alarm, d.white.is_white if d.white else None, d.note)
        for d in diagnostics
    ]
    return Table("durbin_watson", ("Regression", "Durbin-Watson", "Lag-1 ACF", "Alarm", "White noise", "Note"), rows)


def acf_table(name: str, result: AcfResult) -> Table:
    rows = [(k, rho, result.band) for k, rho in zip(result.lags, result.correlations)]
    return Table(f"acf_{name}", ("lag", "correlation", "band"), rows, number_format=SIGNIFICANT)


def trend_table(name: str, fit: TrendFit, time_label: str = "t") -> Table:
    r = fit.result
    rows = [
        ("(Intercept)", r.intercept, r.se_intercept, r.t_intercept, r.p_intercept_two_sided),
        (time_label, r.slope, r.se_slope, r.t_slope, r.p_slope_two_sided),
    ]
    return Table(name, TREND_COLUMNS, rows)


def trend_tables(fits: Sequence[TrendFit]) -> list[Table]:
    if not fits:
        return []
    names = trend_names(len(fits))
    # the second regime has its own time index
    labels = ["t", "t2"]
    tables = [trend_table(name, fit, label) for name, fit, label in zip(names, fits, labels)]
    summary = [
        (name, fit.start.isoformat() if fit.start else "", fit.end.isoformat() if fit.end else "", fit.result.n, fit.adj_r_squared)
        for name, fit in zip(names, fits)
    ]
    tables.append(Table("trend_summary", ("Regime", "Start", "End", "n", "Adj. R-squared"), summary))
    return tables


def diagnostics_tables(diagnostics: Sequence[ResidualDiagnostics], trends: Sequence[TrendFit]) -> list[Table]:
    tables = [durbin_watson_table(diagnostics)]
    tables += [acf_table(d.name, d.acf) for d in diagnostics if d.acf is not None]
    tables += trend_tables(trends)
    return tables


# ---------- Simulation ----------
def recovery_table(report: RecoveryReport) -> Table:
    rows = [(p.name, p.truth, p.coverage, p.bias, p.mean_se, p.sampling_sd) for p in report.parameters]
    return Table(
        "recovery",
        ("Parameter", "Truth", "Coverage", "Bias", "Mean SE", "Sampling SD"),
        rows,
    )
