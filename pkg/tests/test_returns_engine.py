import datetime as dt
import logging
import math

import numpy as np
import pandas as pd
import pytest

from capm_toolkit.errors import DomainError
from capm_toolkit.pricelist_parser import PriceRecord, build_panel
from capm_toolkit.returns_engine import (
    DividendEvent,
    ExcessReturnSeries,
    ReturnSeries,
    RiskFreeSeries,
    all_log_returns,
    annualize,
    deannualize,
    dividend_adjust,
    excess_returns,
    format_returns_csv,
    log_returns,
    market_excess,
    month,
    monthly_sample,
    portfolio_excess,
    read_dividends_csv,
    read_riskfree_csv,
)

rng = np.random.default_rng(1234)


def monthly(values, start="2007-03"):
    return pd.Series(values, index=pd.period_range(start, periods=len(values), freq="M"), dtype=float)


def excess(name, values, start="2007-03"):
    return ExcessReturnSeries(name, monthly(values, start).rename(name))


def flat_rf(rate, start="2007-03", periods=12):
    index = pd.period_range(start, periods=periods, freq="M")
    monthly_rate = pd.Series(rate, index=index, dtype=float)
    return RiskFreeSeries(annual_yield=monthly_rate.map(annualize), monthly_rate=monthly_rate)


class TestMonthlySample:
    def setup_method(self):
        records = [
            PriceRecord("BATU", dt.date(2007, 3, 1), 100.0),
            PriceRecord("BATU", dt.date(2007, 3, 2), 101.0),
            PriceRecord("BATU", dt.date(2007, 4, 3), 110.0),
            PriceRecord("KA", dt.date(2007, 3, 2), 5.0),
            PriceRecord("KA", dt.date(2007, 5, 1), 6.0),
        ]
        self.prices = monthly_sample(build_panel(records))

    def test_price_on_the_first(self):
        assert self.prices.close.at[month("2007-03"), "BATU"] == 100.0

    def test_first_trading_day_after_the_first(self):
        assert self.prices.close.at[month("2007-04"), "BATU"] == 110.0
        assert self.prices.close.at[month("2007-03"), "KA"] == 5.0

    def test_empty_month_is_absent(self):
        assert np.isnan(self.prices.close.at[month("2007-04"), "KA"])
        assert np.isnan(self.prices.close.at[month("2007-05"), "BATU"])

    def test_months_are_contiguous(self):
        assert [str(p) for p in self.prices.close.index] == ["2007-03", "2007-04", "2007-05"]


class TestDividendAdjust:
    def setup_method(self):
        records = [
            PriceRecord("BATU", dt.date(2007, 3, 1), 100.0),
            PriceRecord("BATU", dt.date(2007, 4, 2), 99.0),
        ]
        self.prices = monthly_sample(build_panel(records))

    def test_no_dividends_is_identity(self):
        adjusted = dividend_adjust(self.prices, [])
        pd.testing.assert_frame_equal(adjusted.close, self.prices.close)
        assert all_log_returns(adjusted)["BATU"].values.iloc[0] == pytest.approx(math.log(0.99))

    def test_dividend_added_back_in_ex_month(self):
        adjusted = dividend_adjust(self.prices, [DividendEvent("BATU", month("2007-04"), 2.0)])
        r = all_log_returns(adjusted)["BATU"]
        assert r.values.iloc[0] == pytest.approx(math.log(101 / 100), abs=1e-12)

    def test_zero_dividend_is_identity(self):
        plain = all_log_returns(self.prices)["BATU"].values
        zero = all_log_returns(dividend_adjust(self.prices, [DividendEvent("BATU", month("2007-04"), 0.0)]))
        pd.testing.assert_series_equal(zero["BATU"].values, plain)

    def test_unknown_ticker_is_ignored_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="capm_toolkit.returns_engine"):
            adjusted = dividend_adjust(self.prices, [DividendEvent("UCL", month("2007-04"), 1.0)])
        pd.testing.assert_frame_equal(adjusted.dividends, self.prices.dividends)
        assert "unknown ticker UCL" in caplog.text

    def test_negative_amount(self):
        with pytest.raises(DomainError):
            DividendEvent("BATU", month("2007-04"), -1.0)


class TestLogReturns:
    def test_equal_prices(self):
        assert list(log_returns(monthly([100, 100])).values) == [0.0]

    def test_ten_percent(self):
        r = log_returns(monthly([100, 110]), ticker="BATU")
        assert r.values.iloc[0] == pytest.approx(0.0953102, abs=1e-6)
        assert r.periods == [month("2007-04")]

    def test_gap_breaks_chain(self):
        r = log_returns(monthly([100, np.nan, 120]))
        assert len(r) == 0

    def test_gap_keeps_the_other_returns(self):
        r = log_returns(monthly([100, 105, np.nan, 120, 126]))
        assert [str(p) for p in r.periods] == ["2007-04", "2007-07"]

    def test_fewer_than_two_prices(self):
        assert len(log_returns(monthly([100]))) == 0

    def test_telescoping(self):
        prices = 100 * np.exp(np.cumsum(rng.normal(0, 0.05, 40)))
        r = log_returns(monthly(prices))
        assert r.values.sum() == pytest.approx(math.log(prices[-1]) - math.log(prices[0]), abs=1e-12)


class TestRates:
    @pytest.mark.parametrize(
        "annual, expected",
        [(0.0, 0.0), (0.126825, 0.01), (-0.5, -0.056126)],
    )
    def test_deannualize(self, annual, expected):
        assert deannualize(annual) == pytest.approx(expected, abs=1e-6)

    def test_round_trip(self):
        for y in np.linspace(-0.9, 1.0, 401)[1:-1]:
            assert annualize(deannualize(y)) == pytest.approx(y, abs=1e-12)
            assert deannualize(annualize(y / 12)) == pytest.approx(y / 12, abs=1e-12)

    @pytest.mark.parametrize("bad", [-1.0, -2.0, float("nan")])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            deannualize(bad)

    def test_riskfree_from_annual(self):
        rf = RiskFreeSeries.from_annual({month("2007-04"): 0.126825})
        assert rf.monthly_rate.iloc[0] == pytest.approx(0.01, abs=1e-6)
        assert isinstance(rf.monthly_rate.index, pd.PeriodIndex)


class TestExcessReturns:
    def test_arithmetic(self):
        r = ReturnSeries("BATU", monthly([0.02]))
        out = excess_returns(r, flat_rf(0.01))
        assert out.values.iloc[0] == pytest.approx(0.01)

    def test_zero_rate_is_identity(self):
        r = ReturnSeries("BATU", monthly(rng.normal(0, 0.05, 6)))
        out = excess_returns(r, flat_rf(0.0))
        np.testing.assert_array_equal(out.values.to_numpy(), r.values.to_numpy())

    def test_inner_join(self):
        r = ReturnSeries("BATU", monthly([0.02, 0.03], start="2007-01"))
        rf = flat_rf(0.01, start="2007-02", periods=2)
        out = excess_returns(r, rf)
        assert out.periods == [month("2007-02")]
        assert out.values.iloc[0] == pytest.approx(0.02)

    def test_empty_intersection_warns(self, caplog):
        r = ReturnSeries("BATU", monthly([0.02], start="1990-01"))
        with caplog.at_level(logging.WARNING, logger="capm_toolkit.returns_engine"):
            out = excess_returns(r, flat_rf(0.01))
        assert len(out) == 0
        assert "no months in common" in caplog.text

    def test_antisymmetry(self):
        r_values = rng.normal(0.01, 0.05, 8)
        rf_values = rng.normal(0.005, 0.001, 8)
        forward = excess_returns(
            ReturnSeries("BATU", monthly(r_values)),
            RiskFreeSeries(monthly(rf_values), monthly(rf_values)),
        )
        backward = excess_returns(
            ReturnSeries("RF", monthly(rf_values)),
            RiskFreeSeries(monthly(r_values), monthly(r_values)),
        )
        np.testing.assert_allclose(forward.values.to_numpy(), -backward.values.to_numpy(), atol=1e-15)

    def test_market_excess(self):
        days = pd.to_datetime(["2007-03-01", "2007-03-02", "2007-04-02", "2007-05-01"])
        levels = pd.Series([800.0, 805.0, 880.0, 880.0], index=days)
        out = market_excess(levels, flat_rf(0.01))
        assert out.name == "MARKET"
        np.testing.assert_allclose(out.values.to_numpy(), [math.log(1.1) - 0.01, -0.01], atol=1e-12)


class TestPortfolioExcess:
    def test_symmetry(self):
        out = portfolio_excess([excess("AA", [0.01, 0.03]), excess("BB", [0.03, 0.01])])
        np.testing.assert_allclose(out.values.to_numpy(), [0.02, 0.02])
        assert out.name == "PORTFOLIO"

    def test_identical_series(self):
        values = rng.normal(0, 0.05, 12)
        names = ["AA", "BB", "CC", "DD", "EE", "FF", "GG", "HH", "II", "JJ"]
        out = portfolio_excess([excess(n, values) for n in names])
        np.testing.assert_allclose(out.values.to_numpy(), values, atol=1e-15)

    def test_hand_computed(self):
        out = portfolio_excess(
            [excess("AA", [0.01, 0.02]), excess("BB", [0.04, -0.02]), excess("CC", [0.07, 0.03])]
        )
        np.testing.assert_allclose(out.values.to_numpy(), [0.04, 0.01], atol=1e-15)

    def test_order_invariant(self):
        series = [excess(n, rng.normal(0, 0.05, 10)) for n in ("AA", "BB", "CC", "DD")]
        a = portfolio_excess(series)
        b = portfolio_excess(series[::-1])
        pd.testing.assert_series_equal(a.values, b.values)

    def test_divisor_counts_present_stocks(self):
        out = portfolio_excess([excess("AA", [0.01, 0.03]), excess("BB", [0.05], start="2007-04")])
        np.testing.assert_allclose(out.values.to_numpy(), [0.01, 0.04])
        assert out.constituents[month("2007-03")] == ("AA",)
        assert out.constituents[month("2007-04")] == ("AA", "BB")

    def test_empty(self):
        assert len(portfolio_excess([])) == 0


class TestCsv:
    def test_riskfree(self):
        rf = read_riskfree_csv("month,annual_yield\n2007-04,0.126825\n# note\n2007-05,0\n")
        assert [str(p) for p in rf.periods] == ["2007-04", "2007-05"]
        assert rf.monthly_rate.iloc[0] == pytest.approx(0.01, abs=1e-6)

    def test_riskfree_bad_line(self):
        with pytest.raises(DomainError):
            read_riskfree_csv("2007-04,0.1,extra\n")

    def test_dividends(self):
        events = read_dividends_csv("ticker,month,amount\nBATU,2007-06,12.5\n")
        assert events == [DividendEvent("BATU", month("2007-06"), 12.5)]

    def test_dividends_bad_line(self):
        with pytest.raises(DomainError):
            read_dividends_csv("BATU,2007-06\n")

    def test_returns_csv(self):
        series = ReturnSeries("BATU", monthly([math.log(1.1)], start="2007-04"))
        assert format_returns_csv([series]) == "ticker,month,log_return\nBATU,2007-04,0.0953101798\n"
