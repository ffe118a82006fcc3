"""Result files and terminal reports for benchmark runs."""

import csv
from dataclasses import asdict, fields
from datetime import datetime
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel
from rich import box
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .arnoldi import SKELETONS
from .bench import BenchOutcome, RunRecord
from .config import RejectedConfiguration
from .instrument import ConvergenceRecord
from .types import ResultRow, SolveStatus

RESULT_COLUMNS = [f.name for f in fields(ResultRow)]
HISTORY_COLUMNS = ["cycle", "iter", "relres_est", "relerr", "kappa", "loo"]
_INT_COLUMNS = {"cycle_ct", "iter_ct", "a_ct", "v_ct", "sync_ct"}


def _fmt(value: Optional[float]) -> str:
    """Shortest repr that reads back to the same double; empty for missing."""
    return "" if value is None else repr(float(value))


def emit_results(rows: list[ResultRow], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            values = asdict(row)
            writer.writerow(
                _fmt(values[c]) if c in ("time_s", "accel_pct") else values[c]
                for c in RESULT_COLUMNS
            )


def read_results(path: Path) -> list[ResultRow]:
    with path.open(newline="", encoding="utf-8") as fh:
        out = []
        for raw in csv.DictReader(fh):
            values: dict[str, Any] = dict(raw)
            for c in _INT_COLUMNS:
                values[c] = int(values[c])
            values["time_s"] = float(values["time_s"])
            values["accel_pct"] = float(values["accel_pct"])
            out.append(ResultRow(**values))
        return out


def emit_history(records: list[ConvergenceRecord], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for r in records:
            writer.writerow(
                [r.cycle, r.iteration, _fmt(r.relres_est), _fmt(r.relerr), _fmt(r.kappa),
                 _fmt(r.loo)]
            )


def history_path(out_dir: Path, run: RunRecord) -> Path:
    return out_dir / f"history_{run.slug}_{run.problem}.csv"


class RunSummary(BaseModel):
    problem: str
    label: str
    status: str
    cycles: int
    iterations: int
    cycle_lengths: list[int]
    counters: dict[str, int]
    wall_time_s: Optional[float] = None
    times: list[float] = []
    relres_true: Optional[float] = None
    relerr: Optional[float] = None
    error: Optional[str] = None

    @classmethod
    def of(cls, run: RunRecord) -> "RunSummary":
        return cls(
            problem=run.problem,
            label=run.label,
            status=run.status,
            cycles=run.cycles,
            iterations=run.iterations,
            cycle_lengths=run.cycle_lengths,
            counters=run.counters.as_dict(),
            wall_time_s=run.stats.wall_time_s if run.stats else None,
            times=run.stats.times if run.stats else [],
            relres_true=run.relres_true,
            relerr=run.relerr,
            error=run.error,
        )


class ProblemErrorSummary(BaseModel):
    problem: str
    error: str


class BenchSummary(BaseModel):
    generated: str
    version: str
    runs: list[RunSummary]
    rejected: list[RejectedConfiguration]
    problem_errors: list[ProblemErrorSummary]


def emit_summary(
    outcome: BenchOutcome, rejected: list[RejectedConfiguration], path: Path
) -> BenchSummary:
    summary = BenchSummary(
        generated=datetime.now().isoformat(),
        version=__version__,
        runs=[RunSummary.of(r) for r in outcome.runs],
        rejected=rejected,
        problem_errors=[
            ProblemErrorSummary(problem=e.problem, error=e.error) for e in outcome.problem_errors
        ],
    )
    path.write_text(summary.model_dump_json(indent=2), encoding="utf-8")
    return summary


class Reporter:
    """Terminal output for benchmark results."""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def print_terminal(
        self,
        rows: list[ResultRow],
        outcome: BenchOutcome,
        rejected: list[RejectedConfiguration],
    ) -> None:
        self.console.print()
        self.console.print(Panel.fit("[bold]Low-sync block Krylov benchmark[/bold]",
                                     border_style="blue"))
        for problem in dict.fromkeys(r.problem for r in rows):
            self._print_table(problem, [r for r in rows if r.problem == problem])
        self._print_problems(outcome, rejected)

    def _print_table(self, problem: str, rows: list[ResultRow]) -> None:
        table = Table(title=problem, box=box.ROUNDED, show_header=True, header_style="bold")
        table.add_column("Configuration", style="cyan")
        table.add_column("Time (s)", justify="right")
        table.add_column("% Accel.", justify="right")
        for name in ("Cycle Ct.", "Iter Ct.", "A Ct.", "V Ct.", "Sync Ct."):
            table.add_column(name, justify="right")
        table.add_column("Status", justify="center")
        for r in rows:
            table.add_row(
                r.label, f"{r.time_s:.4f}", f"{r.accel_pct:.2f}", str(r.cycle_ct),
                str(r.iter_ct), str(r.a_ct), str(r.v_ct), str(r.sync_ct),
                self._status(r.status),
            )
        self.console.print(table)

    def _status(self, status: str) -> str:
        return {
            SolveStatus.CONVERGED.value: "[green]converged[/green]",
            SolveStatus.MAX_CYCLES_EXHAUSTED.value: "[yellow]max cycles[/yellow]",
            SolveStatus.DEAD.value: "[red]dead[/red]",
        }.get(status, f"[red]{status}[/red]")

    def _print_problems(
        self, outcome: BenchOutcome, rejected: list[RejectedConfiguration]
    ) -> None:
        errors = [r for r in outcome.runs if r.status == "error"]
        if not (errors or rejected or outcome.problem_errors):
            return
        self.console.print()
        self.console.print("[bold red]Issues Found:[/bold red]")
        for e in outcome.problem_errors:
            self.console.print(f"  [red]X {e.problem}[/red]: {escape(e.error)}")
        for r in errors:
            message = escape(r.error or "")
            self.console.print(f"  [red]X {r.label} on {r.problem}[/red]: {message}")
        for rej in rejected:
            entry, reason = escape(str(rej.entry)), escape(rej.reason)
            self.console.print(f"  [yellow]! rejected {entry}[/yellow]: {reason}")

    def print_skeletons(self) -> None:
        table = Table(box=box.ROUNDED, show_header=True, header_style="bold")
        table.add_column("Skeleton", style="cyan")
        table.add_column("Description")
        table.add_column("Syncs / cycle", justify="right")
        table.add_column("LOO bound", justify="center")
        for info in SKELETONS.values():
            table.add_row(info.name, info.description, info.syncs_per_cycle, info.loo_bound)
        self.console.print(table)

