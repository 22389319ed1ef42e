"""Command-line interface for the norm inflation experiments."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Any

import typer
from rich.console import Console
from rich.table import Table

from .config import SWEEPABLE, parse_config
from .constants import ConfigError
from .logger import enable_file_logging, logger
from .runner import EXIT_ERROR, RunResult, run

app = typer.Typer(
    name="norm-inflation-lab",
    help="Reproduce norm inflation for the Boussinesq equations with scale-invariant data",
    add_completion=True,
)
console = Console()

# eta_app scale used by --debug-corrupt-lom
DEBUG_CORRUPTION = 1.5

ConfigOption = Annotated[
    Path | None, typer.Option("--config", "-c", help="TOML experiment file", exists=True)
]
AlphaOption = Annotated[float | None, typer.Option("--alpha", help="Scaling exponent alpha")]
DeltaOption = Annotated[float | None, typer.Option("--delta", help="Data size delta")]
OutOption = Annotated[Path | None, typer.Option("--out", "-o", help="Output directory")]
CorruptOption = Annotated[
    bool,
    typer.Option(
        "--debug-corrupt-lom",
        help=f"Scale the leading-order model by {DEBUG_CORRUPTION} (negative control)",
    ),
]
DebugOption = Annotated[bool, typer.Option("--debug", "-d", help="Enable debug logging")]


def _alpha_list(value: str | None) -> list[float] | None:
    if value is None:
        return None
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"not a comma separated list of numbers: {value}") from e


def _summary(result: RunResult) -> Table:
    report = result.report
    table = Table(title=f"{report.experiment}: {'PASS' if report.passed else 'FAIL'}")
    table.add_column("check")
    table.add_column("lhs", justify="right")
    table.add_column("rhs", justify="right")
    table.add_column("margin", justify="right")
    table.add_column("pass", justify="center")
    for check in report.checks:
        table.add_row(
            check.name,
            f"{check.lhs:.6g}",
            f"{check.rhs:.6g}",
            f"{check.margin:+.3g}",
            "[green]yes[/green]" if check.passed else "[red]no[/red]",
        )
    return table


def _execute(experiment: str, config: Path | None, debug: bool, **overrides: Any) -> None:
    """Parse, run, print the summary and exit with the run's status."""
    if debug:
        logger.enable("norm_inflation_lab")
        try:
            logger.debug(f"Debug logging enabled, writing {enable_file_logging()}")
        except OSError as e:
            logger.warning(f"Debug log unavailable: {e}")

    try:
        cfg = parse_config(config, {**overrides, "experiment": experiment})
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        for problem in e.problems:
            typer.echo(f"config: {problem}", err=True)
        raise typer.Exit(code=EXIT_ERROR) from e

    result = run(cfg)
    console.print(_summary(result))
    if result.report.error is not None:
        console.print(f"[red]error:[/red] {result.report.error}")
    console.print(f"series: {result.series_path}\nreport: {result.report_path}")
    raise typer.Exit(code=result.exit_code)


@app.command()
def lom2d(
    config: ConfigOption = None,
    alpha: AlphaOption = None,
    delta: DeltaOption = None,
    out: OutOption = None,
    debug_corrupt_lom: CorruptOption = False,
    debug: DebugOption = False,
) -> None:
    """Integrate the 2d leading-order model and verify its growth bounds."""
    _execute(
        "lom2d",
        config,
        debug,
        alpha=alpha,
        delta=delta,
        output_dir=out,
        corrupt_lom=DEBUG_CORRUPTION if debug_corrupt_lom else None,
    )


@app.command()
def lom3d(
    config: ConfigOption = None,
    alpha: AlphaOption = None,
    delta: DeltaOption = None,
    out: OutOption = None,
    case: Annotated[str | None, typer.Option("--case", help="Sign case: i or ii")] = None,
    debug_corrupt_lom: CorruptOption = False,
    debug: DebugOption = False,
) -> None:
    """Integrate the axisymmetric 3d leading-order model and verify its growth dichotomy."""
    _execute(
        "lom3d",
        config,
        debug,
        alpha=alpha,
        delta=delta,
        output_dir=out,
        case3d=case,
        corrupt_lom=DEBUG_CORRUPTION if debug_corrupt_lom else None,
    )


@app.command("elliptic-check")
def elliptic_check(
    config: ConfigOption = None,
    alpha_list: Annotated[
        str | None, typer.Option("--alpha-list", help="Comma separated alpha ladder")
    ] = None,
    out: OutOption = None,
    debug: DebugOption = False,
) -> None:
    """Check the alpha-uniform elliptic estimates on an alpha ladder."""
    _execute("elliptic-check", config, debug, alpha_list=_alpha_list(alpha_list), output_dir=out)


@app.command()
def remainder2d(
    config: ConfigOption = None,
    alpha: AlphaOption = None,
    delta: DeltaOption = None,
    out: OutOption = None,
    debug_corrupt_lom: CorruptOption = False,
    debug: DebugOption = False,
) -> None:
    """Evolve the full 2d system against the leading-order model and bound the remainder."""
    _execute(
        "remainder2d",
        config,
        debug,
        alpha=alpha,
        delta=delta,
        output_dir=out,
        corrupt_lom=DEBUG_CORRUPTION if debug_corrupt_lom else None,
    )


@app.command()
def convergence(
    config: ConfigOption = None,
    alpha: AlphaOption = None,
    delta: DeltaOption = None,
    levels: Annotated[
        int | None, typer.Option("--levels", help="Number of (h, dt) halvings plus one")
    ] = None,
    out: OutOption = None,
    debug: DebugOption = False,
) -> None:
    """Halve h and dt together on the 2d model and report observed orders."""
    _execute("convergence", config, debug, alpha=alpha, delta=delta, levels=levels, output_dir=out)


@app.command()
def sweep(
    config: ConfigOption = None,
    alpha_list: Annotated[
        str | None, typer.Option("--alpha-list", help="Comma separated alpha ladder")
    ] = None,
    of: Annotated[
        str | None, typer.Option("--of", help=f"Experiment to sweep: {', '.join(SWEEPABLE)}")
    ] = None,
    delta: DeltaOption = None,
    out: OutOption = None,
    workers: Annotated[
        int | None, typer.Option("--workers", "-w", help="Size of the process pool")
    ] = None,
    debug_corrupt_lom: CorruptOption = False,
    debug: DebugOption = False,
) -> None:
    """Run one experiment over an alpha ladder and summarize the trends."""
    _execute(
        "sweep",
        config,
        debug,
        alpha_list=_alpha_list(alpha_list),
        sweep_of=of,
        delta=delta,
        output_dir=out,
        workers=workers,
        corrupt_lom=DEBUG_CORRUPTION if debug_corrupt_lom else None,
    )


if __name__ == "__main__":
    app()
