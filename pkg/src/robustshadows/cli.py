"""Command-line interface.

Exit codes: 0 success, 2 configuration problem, 3 runtime failure,
4 non-invertible calibration (a coefficient estimate at or below zero, so
the channel inverse does not exist).
"""

from __future__ import annotations

import sys
from dataclasses import replace

import click

from . import runner
from .config import Config, load_config
from .errors import ConfigError, NonInvertibleCalibrationError, RobustShadowsError


def _load(config_path: str, seed: int | None, out: str | None) -> Config:
    cfg = load_config(config_path)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if out is not None:
        cfg = replace(cfg, out_dir=out)
    return cfg


def _run(step) -> None:
    try:
        written = step()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except NonInvertibleCalibrationError as exc:
        click.echo(f"calibration error: {exc}", err=True)
        sys.exit(4)
    except (RobustShadowsError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    for path in written:
        click.echo(str(path))


def _common(fn):
    fn = click.option("--config", "config_path", required=True,
                      help="Experiment config file (YAML).")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Override the config's master seed.")(fn)
    fn = click.option("--out", default=None,
                      help="Override the config's output directory.")(fn)
    fn = click.option("--preset", default=None,
                      help="Force this noise preset for every experiment.")(fn)
    return fn


@click.group()
def main() -> None:
    """Calibrated randomized-measurement experiments on simulated readout."""


@main.command()
@_common
def calibrate(config_path, seed, out, preset) -> None:
    """Characterize readout noise and write per-qubit flip rates."""
    _run(lambda: runner.cmd_calibrate(_load(config_path, seed, out), preset))


@main.command()
@_common
def acquire(config_path, seed, out, preset) -> None:
    """Run the interleaved calibration/measurement plan."""
    _run(lambda: runner.cmd_acquire(_load(config_path, seed, out), preset))


@main.command()
@_common
@click.option("--non-robust", is_flag=True,
              help="Skip the calibration inverse (fix all coefficients to 1/3).")
def estimate(config_path, seed, out, preset, non_robust) -> None:
    """Compute estimates from recorded data."""
    _run(lambda: runner.cmd_estimate(_load(config_path, seed, out), preset, non_robust))


@main.command("report-figures")
@_common
def report_figures(config_path, seed, out, preset) -> None:
    """Bundle estimate outputs into per-panel CSV files."""
    _run(lambda: runner.cmd_report_figures(_load(config_path, seed, out), preset))


@main.command("run-all")
@_common
@click.option("--non-robust", is_flag=True,
              help="Skip the calibration inverse (fix all coefficients to 1/3).")
def run_all(config_path, seed, out, preset, non_robust) -> None:
    """Calibrate, acquire, estimate, and bundle figures in one go."""
    _run(lambda: runner.cmd_run_all(_load(config_path, seed, out), preset, non_robust))


if __name__ == "__main__":
    main()
