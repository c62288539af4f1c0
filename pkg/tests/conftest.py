"""Shared fixtures: synthetic input sets written once per session."""

from pathlib import Path

import pytest

from capm_toolkit.simulation import (
    SimulationSpec,
    generate_index_levels,
    generate_pricelist,
    generate_riskfree_csv,
)


def write_market(directory: Path, spec: SimulationSpec) -> dict[str, Path]:
    """Price list, index and T-bill files for ``spec`` under ``directory``."""
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "input": ("pricelist.txt", generate_pricelist(spec)),
        "index": ("index.csv", generate_index_levels(spec)),
        "riskfree": ("riskfree.csv", generate_riskfree_csv(spec)),
    }
    paths = {}
    for key, (name, text) in files.items():
        path = directory / name
        path.write_text(text, encoding="utf-8")
        paths[key] = path
    return paths


@pytest.fixture(scope="session")
def default_spec() -> SimulationSpec:
    # 10 stocks, 32 return months -> 33 months of daily prices
    return SimulationSpec(n_stocks=10, n_months=32, seed=42)


@pytest.fixture(scope="session")
def pricelist_10x33(default_spec) -> str:
    return generate_pricelist(default_spec)


@pytest.fixture(scope="session")
def market_files(tmp_path_factory, default_spec) -> dict[str, Path]:
    return write_market(tmp_path_factory.mktemp("market"), default_spec)


@pytest.fixture(scope="session")
def noiseless_files(tmp_path_factory) -> dict[str, Path]:
    spec = SimulationSpec(n_stocks=3, true_betas=(1.0,), true_alphas=(0.0,), idio_sd=(0.0,), seed=7)
    return write_market(tmp_path_factory.mktemp("noiseless"), spec)
