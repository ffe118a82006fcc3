"""Command-line interface for lowsync-krylov."""

import logging
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .bench import execute, result_rows
from .config import load_config
from .errors import ConfigurationError
from .reporter import Reporter, emit_history, emit_results, emit_summary, history_path
from .types import DiagnosticsLevel

app = typer.Typer(
    name="lowsync-bench",
    help="Benchmark low-synchronization block Arnoldi variants in restarted block FOM/GMRES",
)
console = Console()
logger = logging.getLogger("lowsync_krylov")

EXIT_OK = 0
EXIT_IO = 1
EXIT_ALL_FAILED = 2


def version_callback(value: bool) -> None:
    """Display version and exit."""
    if value:
        console.print(f"lowsync-bench version {__version__}")
        raise typer.Exit()


def skeletons_callback(value: bool) -> None:
    if value:
        Reporter(console).print_skeletons()
        raise typer.Exit()


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        help="Show version and exit",
        callback=version_callback,
        is_eager=True,
    ),
    list_skeletons_flag: Optional[bool] = typer.Option(
        None,
        "--list-skeletons",
        help="Show the skeleton catalogue and exit",
        callback=skeletons_callback,
        is_eager=True,
    ),
) -> None:
    """lowsync-bench: sync-point accounting for block Krylov solvers."""
    pass


def run_bench(
    config_file: Path,
    out: Optional[Path] = None,
    repetitions: Optional[int] = None,
    diagnostics: Optional[DiagnosticsLevel] = None,
    workers: Optional[int] = None,
    reporter: Optional[Reporter] = None,
) -> int:
    """
    Run a benchmark file and write its result files.

    Returns 0 on success, 1 when the configuration or the output directory cannot be
    read or written, and 2 when every attempted run failed.
    """
    try:
        bench = load_config(config_file)
    except (OSError, ConfigurationError) as e:
        logger.error("cannot load %s: %s", config_file, e)
        return EXIT_IO

    if out is None and bench.base_dir is not None and not bench.output.is_absolute():
        out = bench.base_dir / bench.output
    overrides = {
        "output": out,
        "repetitions": repetitions,
        "diagnostics": diagnostics,
        "workers": workers,
    }
    bench = bench.model_copy(update={k: v for k, v in overrides.items() if v is not None})
    reporter = reporter or Reporter(console)

    outcome = execute(bench, reporter.console)
    rows = result_rows(outcome.runs)
    try:
        bench.output.mkdir(parents=True, exist_ok=True)
        emit_results(rows, bench.output / "results.csv")
        for run in outcome.runs:
            if run.history:
                emit_history(run.history, history_path(bench.output, run))
        emit_summary(outcome, bench.rejected, bench.output / "summary.json")
    except OSError as e:
        logger.error("cannot write results to %s: %s", bench.output, e)
        return EXIT_IO

    reporter.print_terminal(rows, outcome, bench.rejected)
    return EXIT_ALL_FAILED if outcome.all_failed else EXIT_OK


@app.command()
def run(
    config_file: Path = typer.Argument(..., help="Benchmark TOML file"),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        "-o",
        help="Output directory (overrides the config file)",
    ),
    repetitions: Optional[int] = typer.Option(
        None,
        "--repetitions",
        "-r",
        min=1,
        help="Timed repetitions per run",
    ),
    diagnostics: Optional[DiagnosticsLevel] = typer.Option(
        None,
        "--diagnostics",
        "-d",
        help="Stability diagnostics: none, cycle or iteration",
    ),
    workers: Optional[int] = typer.Option(
        None,
        "--workers",
        "-w",
        min=1,
        help="Worker threads for independent runs",
    ),
    sequential: bool = typer.Option(
        False,
        "--sequential",
        help="Run one solve at a time for clean timings",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Verbose output",
    ),
) -> None:
    """Run every configuration on every problem of CONFIG_FILE."""
    configure_logging(verbose)
    code = run_bench(
        config_file,
        out=out,
        repetitions=repetitions,
        diagnostics=diagnostics,
        workers=1 if sequential else workers,
    )
    if code != EXIT_OK:
        raise typer.Exit(code=code)


@app.command("list-skeletons")
def list_skeletons() -> None:
    """Show the skeleton catalogue with sync counts and LOO bounds."""
    Reporter(console).print_skeletons()


if __name__ == "__main__":
    app()
