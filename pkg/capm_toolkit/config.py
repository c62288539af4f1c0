"""Run configuration and logging setup for the command line."""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass
from pathlib import Path

from rich.console import Console
from rich.logging import RichHandler

from .errors import DomainError

ALLOWED_LEVELS = (0.01, 0.05, 0.10)
FORMATS = ("csv", "json")


def parse_levels(text: str) -> tuple[float, ...]:
    """``"1,5,10"`` (percent) -> (0.01, 0.05, 0.10)."""
    levels = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            percent = float(part)
        except ValueError:
            raise DomainError(f"significance level {part!r} is not a number") from None
        matches = [a for a in ALLOWED_LEVELS if abs(a * 100 - percent) < 1e-9]
        if not matches:
            raise DomainError(f"significance level {part}% not in 1, 5, 10")
        levels.append(matches[0])
    if not levels:
        raise DomainError("at least one significance level is required")
    return tuple(sorted(set(levels)))


@dataclass(frozen=True)
class RunConfig:
    out_dir: Path
    input_path: Path | None = None
    index_path: Path | None = None
    riskfree_path: Path | None = None
    dividends_path: Path | None = None
    date_from: dt.date | None = None
    date_to: dt.date | None = None
    output_format: str = "csv"
    strict: bool = False
    levels: tuple[float, ...] = ALLOWED_LEVELS
    max_lag: int = 10
    split_date: dt.date | None = None
    seed: int | None = None
    verify: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.date_from and self.date_to and not self.date_from < self.date_to:
            raise DomainError(f"--from {self.date_from} must be before --to {self.date_to}")
        if not set(self.levels) <= set(ALLOWED_LEVELS) or not self.levels:
            raise DomainError(f"levels must be a non-empty subset of {ALLOWED_LEVELS}")
        if self.output_format not in FORMATS:
            raise DomainError(f"format must be one of {', '.join(FORMATS)}")
        if self.max_lag < 1:
            raise DomainError(f"--max-lag must be >= 1, got {self.max_lag}")
        if self.workers < 1:
            raise DomainError(f"--workers must be >= 1, got {self.workers}")


def configure_logging(verbose: bool = False) -> None:
    """Route toolkit logs through rich; library modules only ever call getLogger."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False, markup=False)],
        force=True,
    )
