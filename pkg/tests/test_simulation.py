import math

import numpy as np
import pytest

from capm_toolkit.errors import InvalidSpecError
from capm_toolkit.pricelist_parser import TICKER_RE, build_panel, parse_index_levels, parse_price_list
from capm_toolkit.returns_engine import all_log_returns, market_excess, month, monthly_sample, read_riskfree_csv
from capm_toolkit.simulation import (
    PUBLISHED_BETAS,
    SimulationSpec,
    generate_index_levels,
    generate_market,
    generate_pricelist,
    generate_riskfree_csv,
    recovery_experiment,
    ticker_names,
)


class TestSimulationSpec:
    def test_defaults_match_published_shape(self):
        spec = SimulationSpec()
        assert spec.n_stocks == 10 and spec.n_months == 32
        assert spec.true_betas == PUBLISHED_BETAS
        assert spec.true_alphas == (0.0,) * 10
        assert spec.tickers[0] == "BATU"

    def test_return_months(self):
        months = SimulationSpec(n_months=32).return_months
        assert len(months) == 32
        assert months[0] == month("2007-04")

    def test_default_betas_cycle(self):
        spec = SimulationSpec(n_stocks=12)
        assert len(spec.true_betas) == 12
        assert spec.true_betas[10] == PUBLISHED_BETAS[0]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_months": 1},
            {"n_stocks": 0},
            {"market_sd": 0.0},
            {"idio_sd": (-0.01,)},
            {"n_stocks": 3, "true_betas": (1.0, 2.0)},
            {"rf_annual": -1.0},
            {"start_month": "not-a-month"},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(InvalidSpecError):
            SimulationSpec(**kwargs)

    def test_json_scalars_broadcast(self):
        spec = SimulationSpec.from_json('{"n_stocks": 3, "true_betas": 1.2, "idio_sd": 0.02}')
        assert spec.true_betas == (1.2, 1.2, 1.2)
        assert spec.idio_sd == (0.02, 0.02, 0.02)

    def test_json_round_trip(self):
        spec = SimulationSpec(n_stocks=4, n_months=20, seed=9)
        assert SimulationSpec.from_json(spec.to_json()) == spec

    @pytest.mark.parametrize("text", ['{"n_months": 32, "colour": "red"}', "{not json", "[1, 2]"])
    def test_bad_json(self, text):
        with pytest.raises(InvalidSpecError):
            SimulationSpec.from_json(text)

    def test_with_seed(self):
        spec = SimulationSpec(n_stocks=2, seed=1)
        assert spec.with_seed(5).seed == 5
        assert spec.with_seed(5).true_betas == spec.true_betas


def test_ticker_names():
    names = ticker_names(40)
    assert len(set(names)) == 40
    assert all(TICKER_RE.fullmatch(n) for n in names)


class TestGenerateMarket:
    def test_noiseless_identity(self):
        spec = SimulationSpec(n_stocks=3, true_betas=(1.0,), true_alphas=(0.0,), idio_sd=(0.0,))
        market, stocks = generate_market(spec)
        for stock in stocks:
            np.testing.assert_array_equal(stock.values.to_numpy(), market.values.to_numpy())

    def test_affine(self):
        spec = SimulationSpec(n_stocks=1, true_betas=(2.0,), true_alphas=(0.01,), idio_sd=(0.0,))
        market, (stock,) = generate_market(spec)
        np.testing.assert_allclose(stock.values.to_numpy(), 0.01 + 2 * market.values.to_numpy(), rtol=0, atol=1e-15)

    def test_deterministic(self):
        spec = SimulationSpec(seed=123)
        (m1, s1), (m2, s2) = generate_market(spec), generate_market(spec)
        np.testing.assert_array_equal(m1.values.to_numpy(), m2.values.to_numpy())
        for a, b in zip(s1, s2):
            np.testing.assert_array_equal(a.values.to_numpy(), b.values.to_numpy())

    def test_pcg64_draw_order(self):
        spec = SimulationSpec(
            n_stocks=3, n_months=32, market_mean=0.0, market_sd=1.0,
            true_betas=(0.0,), true_alphas=(0.0,), idio_sd=(1.0,), seed=42,
        )
        market, stocks = generate_market(spec)
        # first standard normals of default_rng(42)
        np.testing.assert_allclose(
            market.values.to_numpy()[:5],
            [0.30471708, -1.03998411, 0.7504512, 0.94056472, -1.95103519],
            atol=1e-8,
        )
        rng = np.random.default_rng(42)
        rng.standard_normal(32)
        shocks = rng.standard_normal((3, 32))
        for row, stock in zip(shocks, stocks):
            np.testing.assert_array_equal(stock.values.to_numpy(), row)

    def test_seed_matters(self):
        a, _ = generate_market(SimulationSpec(seed=1))
        b, _ = generate_market(SimulationSpec(seed=2))
        assert not np.array_equal(a.values.to_numpy(), b.values.to_numpy())


class TestGeneratePricelist:
    def test_zero_returns_give_constant_prices(self):
        spec = SimulationSpec(n_stocks=2, n_months=4, true_betas=(0.0,), idio_sd=(0.0,), rf_annual=0.0)
        records, _ = parse_price_list(generate_pricelist(spec, base_prices=250.0))
        assert {r.close for r in records} == {250.0}

    def test_deterministic(self, default_spec, pricelist_10x33):
        assert generate_pricelist(default_spec) == pricelist_10x33

    def test_pipeline_round_trip(self, default_spec, pricelist_10x33):
        records, report = parse_price_list(pricelist_10x33, strict=True)
        assert report.rejected == ()
        returns = all_log_returns(monthly_sample(build_panel(records)))
        _, stocks = generate_market(default_spec)
        for stock in stocks:
            r = returns[stock.name]
            assert list(r.values.index) == list(stock.values.index)
            np.testing.assert_allclose(
                r.values.to_numpy(), stock.values.to_numpy() + default_spec.rf_monthly, rtol=0, atol=1e-9
            )

    def test_index_round_trip(self, default_spec):
        levels = parse_index_levels(generate_index_levels(default_spec))
        rf = read_riskfree_csv(generate_riskfree_csv(default_spec))
        market, _ = generate_market(default_spec)
        out = market_excess(levels, rf)
        np.testing.assert_allclose(out.values.to_numpy(), market.values.to_numpy(), rtol=0, atol=1e-9)

    def test_riskfree_file(self, default_spec):
        lines = generate_riskfree_csv(default_spec).splitlines()
        assert lines[0] == "month,annual_yield"
        assert lines[1] == "2007-04,0.1"
        assert len(lines) == default_spec.n_months + 1

    def test_bad_base_price(self):
        with pytest.raises(InvalidSpecError):
            generate_pricelist(SimulationSpec(n_stocks=2), base_prices=0.0)


class TestRecovery:
    def test_needs_enough_trials(self):
        with pytest.raises(InvalidSpecError):
            recovery_experiment(SimulationSpec(), trials=99)

    def test_noiseless_has_no_bias(self):
        spec = SimulationSpec(n_stocks=3, true_betas=(0.5, 1.0, 1.5), true_alphas=(0.0, 0.01, -0.01), idio_sd=(0.0,))
        report = recovery_experiment(spec, trials=100)
        for p in report.parameters:
            assert abs(p.bias) <= 1e-10, p.name

    def test_beta_coverage(self):
        spec = SimulationSpec(
            n_stocks=1, n_months=32, true_betas=(0.6832,), true_alphas=(0.0,), idio_sd=(0.04,), seed=42
        )
        report = recovery_experiment(spec, trials=1000, level=0.95)
        beta = report.get("beta[BATU]")
        assert beta.truth == 0.6832
        assert 0.92 <= beta.coverage <= 0.98
        assert abs(beta.bias) < 0.01
        assert beta.mean_se == pytest.approx(beta.sampling_sd, rel=0.15)

    def test_standard_error_scales_with_root_n(self):
        short = SimulationSpec(n_stocks=1, n_months=32, true_betas=(0.6832,), idio_sd=(0.04,))
        long = SimulationSpec(n_stocks=1, n_months=64, true_betas=(0.6832,), idio_sd=(0.04,))
        ratio = (
            recovery_experiment(short, trials=200).get("beta[BATU]").mean_se
            / recovery_experiment(long, trials=200).get("beta[BATU]").mean_se
        )
        assert ratio == pytest.approx(math.sqrt(2), rel=0.1)

    def test_portfolio_diversifies(self):
        report = recovery_experiment(SimulationSpec(), trials=200)
        portfolio = report.get("beta[PORTFOLIO]")
        assert portfolio.truth == pytest.approx(np.mean(PUBLISHED_BETAS))
        assert abs(portfolio.bias) < 4 * portfolio.sampling_sd / math.sqrt(report.trials)
        stock_var = np.mean([report.get(f"beta[{t}]").sampling_sd ** 2 for t in SimulationSpec().tickers])
        assert portfolio.sampling_sd**2 < stock_var

    def test_workers_do_not_change_results(self):
        spec = SimulationSpec(n_stocks=2, seed=5)
        assert recovery_experiment(spec, trials=100, workers=1) == recovery_experiment(spec, trials=100, workers=4)

    def test_report_covers_every_parameter(self):
        report = recovery_experiment(SimulationSpec(n_stocks=2), trials=100)
        names = [p.name for p in report.parameters]
        assert names == [
            "beta[BATU]",
            "alpha[BATU]",
            "beta[BOBU]",
            "alpha[BOBU]",
            "beta[PORTFOLIO]",
            "alpha[PORTFOLIO]",
        ]
        assert all(0.0 <= p.coverage <= 1.0 for p in report.parameters)
        with pytest.raises(KeyError):
            report.get("beta[UCL]")
