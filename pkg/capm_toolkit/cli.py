"""
Command line front end.

    python -m capm_toolkit parse     --input prices.txt --out out/
    python -m capm_toolkit estimate  --input prices.txt --index alsi.csv --riskfree tbill.csv --out out/
    python -m capm_toolkit report    ... (parse + returns + estimate + diagnose)
    python -m capm_toolkit simulate  --spec spec.json --out fixtures/

Exit codes: 0 ok, 1 toolkit error or invalid option value, 2 missing input,
3 strict parse failure, 4 no usable overlap, 5 invalid simulation spec.
"""

import logging
from contextlib import contextmanager
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import NoReturn, Optional

import typer
from typing_extensions import Annotated

from .config import RunConfig, configure_logging, parse_levels
from .errors import CapmToolkitError, DomainError, EmptyOverlapError, InvalidSpecError, PriceListParseError
from .pipeline import build_returns, load_inputs, load_panel, read_input, run_diagnostics, run_estimation
from .pricelist_parser import validate_panel
from .report import (
    diagnostics_tables,
    estimation_tables,
    parse_tables,
    portfolio_composition_table,
    recovery_table,
    returns_table,
    write_tables,
)
from .simulation import SimulationSpec, generate_index_levels, generate_pricelist, generate_riskfree_csv, recovery_experiment

logger = logging.getLogger(__name__)

app = typer.Typer(
    help="USE CAPM toolkit: daily price lists in, CAPM beta tables and diagnostics out.",
    add_completion=False,
    no_args_is_help=True,
)


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


# ---------- Options ----------
InputOpt = Annotated[Optional[Path], typer.Option("--input", help="Daily price list: TICKER,YYYY-MM-DD,CLOSE[,VOLUME].")]
IndexOpt = Annotated[Optional[Path], typer.Option("--index", help="Daily market index: YYYY-MM-DD,level.")]
RiskFreeOpt = Annotated[Optional[Path], typer.Option("--riskfree", help="Risk-free yields: YYYY-MM,annual_yield.")]
DividendsOpt = Annotated[Optional[Path], typer.Option("--dividends", help="Dividends: TICKER,YYYY-MM,amount.")]
FromOpt = Annotated[Optional[datetime], typer.Option("--from", formats=["%Y-%m-%d"], help="First date to use.")]
ToOpt = Annotated[Optional[datetime], typer.Option("--to", formats=["%Y-%m-%d"], help="Last date to use.")]
OutOpt = Annotated[Path, typer.Option("--out", help="Output directory.")]
FormatOpt = Annotated[OutputFormat, typer.Option("--format", help="Table format.")]
StrictOpt = Annotated[bool, typer.Option("--strict", help="Abort on the first malformed price line.")]
LevelsOpt = Annotated[str, typer.Option("--levels", help="Significance levels in percent, e.g. 1,5,10.")]
MaxLagOpt = Annotated[int, typer.Option("--max-lag", help="Largest ACF lag.")]
SplitOpt = Annotated[Optional[datetime], typer.Option("--split", formats=["%Y-%m-%d"], help="Split the index trend after this date.")]
VerifyOpt = Annotated[bool, typer.Option("--verify", help="Cross-check every fit against the high-precision oracle.")]
WorkersOpt = Annotated[int, typer.Option("--workers", help="Threads for per-stock fits and Monte-Carlo trials.")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Override the simulation seed.")]
SpecOpt = Annotated[Optional[Path], typer.Option("--spec", help="SimulationSpec JSON; defaults to the 10-stock market.")]
TrialsOpt = Annotated[int, typer.Option("--trials", help="Monte-Carlo trials for the recovery report.")]


def _date(value: Optional[datetime]):
    return value.date() if value is not None else None


def _fail(message: str, code: int) -> NoReturn:
    typer.secho(message, fg=typer.colors.RED, err=True)
    raise typer.Exit(code=code)


def _config(**kwargs) -> RunConfig:
    try:
        levels = kwargs.pop("levels", None)
        if levels is not None:
            kwargs["levels"] = parse_levels(levels)
        return RunConfig(**kwargs)
    except DomainError as err:
        _fail(f"invalid option: {err}", 1)


@contextmanager
def _exit_codes():
    """Map toolkit errors onto the documented exit codes."""
    try:
        yield
    except FileNotFoundError as err:
        _fail(f"{err.strerror}: {err.filename}", 2)
    except PriceListParseError as err:
        _fail(f"strict parse failed at line {err.line}, column {err.column}: {err.reason}", 3)
    except EmptyOverlapError as err:
        _fail(f"no usable overlap: {err}", 4)
    except InvalidSpecError as err:
        _fail(f"invalid simulation spec: {err}", 5)
    except CapmToolkitError as err:
        _fail(f"error: {err}", 1)


def _done(paths: list[Path], out: Path) -> None:
    typer.secho(f"✅ wrote {len(paths)} file(s) to {out}", fg=typer.colors.GREEN)


@app.callback()
def main(verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging.")] = False):
    configure_logging(verbose)


# ---------- Steps ----------
def _parse_step(config: RunConfig, panel, report) -> list[Path]:
    validation = validate_panel(panel)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    panel_path = config.out_dir / "panel.csv"
    panel_path.write_text(panel.to_csv(), encoding="utf-8")
    typer.echo(
        f"📄 {report.accepted} accepted, {len(report.rejected)} rejected, "
        f"{len(report.duplicates)} duplicate(s); coverage {validation.coverage:.4f}"
    )
    return [panel_path, *write_tables(parse_tables(report, validation), config.out_dir, config.output_format)]


def _returns_step(config: RunConfig, bundle) -> list[Path]:
    raw = [bundle.returns[t] for t in sorted(bundle.returns)]
    if bundle.market_returns is not None:
        raw.append(bundle.market_returns)
    tables = [returns_table("returns", raw, "log_return")]
    if bundle.stocks:
        excess = [*bundle.stocks]
        if bundle.market is not None:
            excess.append(bundle.market)
        excess.append(bundle.portfolio)
        tables += [returns_table("excess_returns", excess, "excess_return"), portfolio_composition_table(bundle.portfolio)]
    return write_tables(tables, config.out_dir, config.output_format)


def _estimate_step(config: RunConfig, run) -> list[Path]:
    r = run.portfolio.result
    typer.echo(f"📈 portfolio β = {r.slope:.4f} (t = {r.t_slope:.3f}), zero-beta rate = {r.intercept:.4f}, n = {r.n}")
    tables = estimation_tables(run.stocks, run.portfolio, config.levels)
    return write_tables(tables, config.out_dir, config.output_format)


def _diagnose_step(config: RunConfig, run, inputs) -> list[Path]:
    diagnostics = run_diagnostics(run, inputs, config)
    return write_tables(diagnostics_tables(diagnostics.residuals, diagnostics.trends), config.out_dir, config.output_format)


# ---------- Commands ----------
@app.command("parse")
def cmd_parse(
    input: InputOpt = None,
    out: OutOpt = Path("out"),
    fmt: FormatOpt = OutputFormat.csv,
    strict: StrictOpt = False,
    date_from: FromOpt = None,
    date_to: ToOpt = None,
):
    """Parse a daily price list into a panel CSV and a parse report."""
    config = _config(out_dir=out, input_path=input, output_format=fmt.value, strict=strict,
                     date_from=_date(date_from), date_to=_date(date_to))
    with _exit_codes():
        paths = _parse_step(config, *load_panel(config))
    _done(paths, out)


@app.command("returns")
def cmd_returns(
    input: InputOpt = None,
    index: IndexOpt = None,
    riskfree: RiskFreeOpt = None,
    dividends: DividendsOpt = None,
    out: OutOpt = Path("out"),
    fmt: FormatOpt = OutputFormat.csv,
    strict: StrictOpt = False,
    date_from: FromOpt = None,
    date_to: ToOpt = None,
):
    """Monthly log returns; excess and portfolio returns when --riskfree is given."""
    config = _config(out_dir=out, input_path=input, index_path=index, riskfree_path=riskfree,
                     dividends_path=dividends, output_format=fmt.value, strict=strict,
                     date_from=_date(date_from), date_to=_date(date_to))
    with _exit_codes():
        bundle = build_returns(load_inputs(config, need_market=False))
        paths = _returns_step(config, bundle)
    _done(paths, out)


@app.command("estimate")
def cmd_estimate(
    input: InputOpt = None,
    index: IndexOpt = None,
    riskfree: RiskFreeOpt = None,
    dividends: DividendsOpt = None,
    out: OutOpt = Path("out"),
    fmt: FormatOpt = OutputFormat.csv,
    strict: StrictOpt = False,
    date_from: FromOpt = None,
    date_to: ToOpt = None,
    levels: LevelsOpt = "1,5,10",
    verify: VerifyOpt = False,
    workers: WorkersOpt = 1,
):
    """Per-stock and portfolio CAPM regressions with hypothesis tests."""
    config = _config(out_dir=out, input_path=input, index_path=index, riskfree_path=riskfree,
                     dividends_path=dividends, output_format=fmt.value, strict=strict,
                     date_from=_date(date_from), date_to=_date(date_to), levels=levels,
                     verify=verify, workers=workers)
    with _exit_codes():
        run = run_estimation(build_returns(load_inputs(config)), config)
        paths = _estimate_step(config, run)
    _done(paths, out)


@app.command("diagnose")
def cmd_diagnose(
    input: InputOpt = None,
    index: IndexOpt = None,
    riskfree: RiskFreeOpt = None,
    dividends: DividendsOpt = None,
    out: OutOpt = Path("out"),
    fmt: FormatOpt = OutputFormat.csv,
    strict: StrictOpt = False,
    date_from: FromOpt = None,
    date_to: ToOpt = None,
    max_lag: MaxLagOpt = 10,
    split: SplitOpt = None,
    workers: WorkersOpt = 1,
):
    """Durbin-Watson, residual ACF and index trend fits."""
    config = _config(out_dir=out, input_path=input, index_path=index, riskfree_path=riskfree,
                     dividends_path=dividends, output_format=fmt.value, strict=strict,
                     date_from=_date(date_from), date_to=_date(date_to), max_lag=max_lag,
                     split_date=_date(split), workers=workers)
    with _exit_codes():
        inputs = load_inputs(config)
        run = run_estimation(build_returns(inputs), config)
        paths = _diagnose_step(config, run, inputs)
    _done(paths, out)


@app.command("simulate")
def cmd_simulate(
    spec: SpecOpt = None,
    out: OutOpt = Path("out"),
    fmt: FormatOpt = OutputFormat.csv,
    seed: SeedOpt = None,
    trials: TrialsOpt = 100,
    workers: WorkersOpt = 1,
):
    """Synthetic price list, index and risk-free files plus an estimator recovery report."""
    config = _config(out_dir=out, output_format=fmt.value, seed=seed, workers=workers)
    with _exit_codes():
        sim = SimulationSpec.from_json(read_input(spec, "--spec")) if spec is not None else SimulationSpec()
        if seed is not None:
            sim = sim.with_seed(seed)
        report = recovery_experiment(sim, trials=trials, workers=config.workers)

        out.mkdir(parents=True, exist_ok=True)
        files = {
            "spec.json": sim.to_json() + "\n",
            "pricelist.txt": generate_pricelist(sim),
            "index.csv": generate_index_levels(sim),
            "riskfree.csv": generate_riskfree_csv(sim),
        }
        paths = []
        for name, text in files.items():
            (out / name).write_text(text, encoding="utf-8")
            paths.append(out / name)
        paths += write_tables([recovery_table(report)], out, config.output_format)
    _done(paths, out)


@app.command("report")
def cmd_report(
    input: InputOpt = None,
    index: IndexOpt = None,
    riskfree: RiskFreeOpt = None,
    dividends: DividendsOpt = None,
    out: OutOpt = Path("out"),
    fmt: FormatOpt = OutputFormat.csv,
    strict: StrictOpt = False,
    date_from: FromOpt = None,
    date_to: ToOpt = None,
    levels: LevelsOpt = "1,5,10",
    max_lag: MaxLagOpt = 10,
    split: SplitOpt = None,
    verify: VerifyOpt = False,
    workers: WorkersOpt = 1,
):
    """Run parse, returns, estimate and diagnose into one output directory."""
    config = _config(out_dir=out, input_path=input, index_path=index, riskfree_path=riskfree,
                     dividends_path=dividends, output_format=fmt.value, strict=strict,
                     date_from=_date(date_from), date_to=_date(date_to), levels=levels,
                     max_lag=max_lag, split_date=_date(split), verify=verify, workers=workers)
    with _exit_codes():
        panel, report = load_panel(config)
        paths = _parse_step(config, panel, report)
        inputs = load_inputs(config, parsed=(panel, report))
        bundle = build_returns(inputs)
        paths += _returns_step(config, bundle)
        run = run_estimation(bundle, config)
        paths += _estimate_step(config, run)
        paths += _diagnose_step(config, run, inputs)
    _done(paths, out)
