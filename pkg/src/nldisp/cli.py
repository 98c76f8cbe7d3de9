"""Command-line front end.

Subcommands: spectrum, sweep-nu, sweep-delta, evolve, compete, verify.
Exit codes: 0 success, 1 check failure, 2 usage/config error,
3 numerical failure.
"""

from __future__ import annotations

import sys

import click

from .config import load_config
from .errors import ConfigError, NldispError
from .scenarios import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    EXIT_NUMERICS,
    EXIT_OK,
    run_scenario,
)


def _common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="Scenario config file (YAML).")(fn)
    fn = click.option("--out", "out_dir", default=None,
                      help="Output directory (defaults to the config's).")(fn)
    fn = click.option("--seed", default=None, type=int,
                      help="Override the config seed.")(fn)
    fn = click.option("--workers", default=1, type=int,
                      help="Worker processes for sweep points.")(fn)
    fn = click.option("--format", "fmt", default="csv",
                      type=click.Choice(["csv", "report"]),
                      help="Primary output flavor.")(fn)
    return fn


def _execute(experiment, config_path, out_dir, seed, workers, fmt):
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error:\n{exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if experiment is not None:
        cfg.experiment = experiment
    try:
        result = run_scenario(cfg, out_dir=out_dir, seed=seed, workers=workers,
                              fmt=fmt)
    except ConfigError as exc:
        click.echo(f"config error:\n{exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except NldispError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICS)
    click.echo(result.summary)
    for path in result.files:
        click.echo(f"  wrote {path}")
    sys.exit(result.exit_code)


@click.group()
def main():
    """Principal spectrum points of nonlocal dispersal operators."""


@main.command()
@_common_options
def spectrum(config_path, out_dir, seed, workers, fmt):
    """Principal spectrum point for one configured operator."""
    _execute("spectrum", config_path, out_dir, seed, workers, fmt)


@main.command("sweep-nu")
@_common_options
def sweep_nu(config_path, out_dir, seed, workers, fmt):
    """Sweep the dispersal rate; emit one spectral row per value."""
    _execute("sweep_nu", config_path, out_dir, seed, workers, fmt)


@main.command("sweep-delta")
@_common_options
def sweep_delta(config_path, out_dir, seed, workers, fmt):
    """Sweep the dispersal distance with auto-scaled resolution."""
    _execute("sweep_delta", config_path, out_dir, seed, workers, fmt)


@main.command()
@_common_options
def evolve(config_path, out_dir, seed, workers, fmt):
    """Integrate the linear evolution equation and export the trajectory."""
    _execute("evolve", config_path, out_dir, seed, workers, fmt)


@main.command()
@_common_options
def compete(config_path, out_dir, seed, workers, fmt):
    """Simulate the two-species competition system."""
    _execute("compete", config_path, out_dir, seed, workers, fmt)


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="Optional config (seed, skip list, output dir).")
@click.option("--out", "out_dir", default="out", help="Output directory.")
@click.option("--seed", default=0, type=int, help="Battery seed.")
@click.option("--skip", default="", help="Comma-separated check names to skip.")
@click.option("--tolerance-scale", "tol_scale", default=1.0, type=float,
              help="Scale the closeness tolerances (0 forces failures).")
def verify(config_path, out_dir, seed, skip, tol_scale):
    """Run the full verification battery; exit 1 on any failed check."""
    skip_set = {s for s in (skip.split(",") if skip else []) if s}
    if config_path is not None:
        try:
            cfg = load_config(config_path)
        except ConfigError as exc:
            click.echo(f"config error:\n{exc}", err=True)
            sys.exit(EXIT_CONFIG)
        seed = cfg.seed if seed == 0 else seed
        skip_set |= set(cfg.verify_skip)
        out_dir = out_dir if out_dir != "out" else cfg.out_dir
    from .verification import run_battery, write_report

    try:
        results = run_battery(seed=seed, skip=skip_set, tol_scale=tol_scale)
    except NldispError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICS)
    csv_path, txt_path = write_report(results, out_dir)
    for r in results:
        click.echo(f"[{r.status.upper():4s}] {r.name}")
    click.echo(f"  wrote {csv_path}")
    click.echo(f"  wrote {txt_path}")
    failed = sum(r.status == "fail" for r in results)
    sys.exit(EXIT_OK if failed == 0 else EXIT_CHECK_FAILED)


if __name__ == "__main__":
    main()
