"""CLI entry point."""

from __future__ import annotations

import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from .config import get_settings, load_catalog, load_experiment_config
from .db import init_db
from .errors import CheckFailure, SimulationAbort, StokesMagnetoError
from .logging import log_event
from .models import CheckCatalog
from .runner import ExperimentOutcome, ExperimentRunner

console = Console()

EXIT_CHECK_FAILED = 2
EXIT_CONFIG_ERROR = 1


def experiment_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """CONFIG_PATH argument plus the --seed and --output-dir overrides."""
    func = click.option(
        "--output-dir",
        type=click.Path(file_okay=False, path_type=Path),
        default=None,
        help="Directory for reports and artifacts (overrides the config).",
    )(func)
    func = click.option(
        "--seed", type=int, default=None, help="Random seed (overrides the config)."
    )(func)
    return click.argument("config_path", type=click.Path(path_type=Path))(func)


def _print_outcome(outcome: ExperimentOutcome, output_dir: Path) -> None:
    table = Table(title=f"{outcome.experiment} checks")
    table.add_column("Check", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Result")
    for check in outcome.checks:
        value = "-" if check.value is None else f"{check.value:.3e}"
        result = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
        table.add_row(check.name, value, result)
    console.print(table)
    console.print(f"Report written to {output_dir / (outcome.experiment + '.json')}")


def run_experiment(
    experiment: str, config_path: Path, seed: int | None, output_dir: Path | None
) -> None:
    """Load, run and report one experiment; exits 1 on configuration errors and
    2 when a check fails or the time stepping aborts."""
    settings = get_settings()
    config = load_experiment_config(config_path)
    if seed is None:
        seed = config.seed if config.seed is not None else settings.seed
    if output_dir is None:
        output_dir = config.output_dir or settings.output_dir

    conn = init_db(settings.db_path) if settings.record_db else None
    runner = ExperimentRunner(config, seed=seed, output_dir=output_dir, conn=conn)
    try:
        outcome = runner.run(experiment)
        _print_outcome(outcome, output_dir)
        outcome.require_passed()
    except (CheckFailure, SimulationAbort) as exc:
        log_event("experiment_failed", experiment=experiment, level="error", error=str(exc))
        console.print(f"[red]{experiment} failed: {exc}[/red]")
        sys.exit(EXIT_CHECK_FAILED)
    except (StokesMagnetoError, ValidationError) as exc:
        click.echo(f"FATAL: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    finally:
        if conn is not None:
            conn.close()


@click.group()
def main() -> None:
    """Stokes-Magneto harness: simulate the truncated magnetic relaxation system
    and verify its analytic ingredients."""


@main.command()
@experiment_options
def simulate(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Evolve the truncated system; writes diagnostics.csv and snapshots."""
    run_experiment("simulate", config_path, seed, output_dir)


@main.command()
@experiment_options
def heat(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Forced fractional heat equation with a frozen velocity."""
    run_experiment("heat", config_path, seed, output_dir)


@main.command()
@experiment_options
def stokes(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Solve the fractional Stokes system; writes velocity.fmhd and pressure.fmhd."""
    run_experiment("stokes", config_path, seed, output_dir)


@main.command("kernel-check")
@experiment_options
def kernel_check(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Green kernel against the spectral solve, plus the Fourier identities."""
    run_experiment("kernel-check", config_path, seed, output_dir)


@main.command()
@experiment_options
def regime(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Classify (d, alpha, beta) points into existence and uniqueness regimes."""
    run_experiment("regime", config_path, seed, output_dir)


@main.command("estimate-check")
@experiment_options
def estimate_check(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Empirical constants of the product and interpolation estimates."""
    run_experiment("estimate-check", config_path, seed, output_dir)


@main.command()
@experiment_options
def convergence(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Distance between runs at cutoffs R and 2R."""
    run_experiment("convergence", config_path, seed, output_dir)


@main.command()
@experiment_options
def stability(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Growth of a small perturbation against the Gronwall envelope."""
    run_experiment("stability", config_path, seed, output_dir)


@main.command("bogovskii-check")
@experiment_options
def bogovskii_check(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Right inverse of the divergence on a smooth corpus."""
    run_experiment("bogovskii-check", config_path, seed, output_dir)


@main.command("lp-check")
@experiment_options
def lp_check(config_path: Path, seed: int | None, output_dir: Path | None) -> None:
    """Littlewood-Paley partition of unity and Bernstein ratios."""
    run_experiment("lp-check", config_path, seed, output_dir)


@main.command("list-checks")
@click.option("--suite", default=None, help="Only list checks of this suite.")
def list_checks(suite: str | None) -> None:
    """List verification checks in the catalog, grouped by suite."""
    settings = get_settings()
    catalog = CheckCatalog(load_catalog(settings.catalog_path)["CHECKS"])
    suites = catalog.suites()
    if suite is not None:
        if suite not in suites:
            click.echo(f"FATAL: unknown suite {suite!r}; known: {', '.join(suites)}", err=True)
            sys.exit(EXIT_CONFIG_ERROR)
        suites = [suite]

    table = Table(title="Verification Checks")
    table.add_column("Suite", style="cyan")
    table.add_column("Check", style="green")
    table.add_column("Metric")
    table.add_column("Description")

    for name in suites:
        for c in catalog.by_suite(name):
            metric = c.metric if isinstance(c.metric, str) else ", ".join(c.metric)
            table.add_row(c.suite, c.name, metric, c.description)
        table.add_section()
    console.print(table)


@main.command()
def init() -> None:
    """Initialize the results database."""
    settings = get_settings()
    conn = init_db(settings.db_path)
    conn.close()
    console.print(f"[green]Database initialized at {settings.db_path}[/green]")


if __name__ == "__main__":
    main()
