"""Execution of the configuration x problem matrix."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn

from .config import BenchConfig, ConfigurationSpec, ProblemSpec
from .errors import KrylovError
from .instrument import ConvergenceRecord, Counters, RunStats
from .problems import Problem
from .solver import SolverConfig, solve, true_residual_and_error
from .types import ResultRow, SolveStatus

logger = logging.getLogger(__name__)


@dataclass
class RunRecord:
    """Everything one (problem, configuration) pair produced."""

    problem: str
    label: str
    slug: str
    status: str                  # a SolveStatus value, or "error"
    cycles: int = 0
    iterations: int = 0
    cycle_lengths: list[int] = field(default_factory=list)
    counters: Counters = field(default_factory=Counters)
    stats: Optional[RunStats] = None
    history: list[ConvergenceRecord] = field(default_factory=list)
    relres_true: Optional[float] = None
    relerr: Optional[float] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.status in ("error", SolveStatus.DEAD.value)


@dataclass
class ProblemError:
    problem: str
    error: str


@dataclass
class BenchOutcome:
    runs: list[RunRecord] = field(default_factory=list)
    problem_errors: list[ProblemError] = field(default_factory=list)

    @property
    def all_failed(self) -> bool:
        attempted = len(self.runs) + len(self.problem_errors)
        return attempted > 0 and all(r.failed for r in self.runs)


def run_one(problem: Problem, config: SolverConfig, repetitions: int) -> RunRecord:
    """Solve ``repetitions`` times; counts come from the last, times from all."""
    op, rhs = problem.system()
    times: list[float] = []
    result = None
    for _ in range(repetitions):
        start = time.perf_counter()
        result = solve(op, rhs, config, X_star=problem.X_star)
        times.append(time.perf_counter() - start)
    assert result is not None

    relres, relerr = true_residual_and_error(op, rhs, result.X, problem.X_star)
    return RunRecord(
        problem=problem.name,
        label=config.label,
        slug=config.slug,
        status=result.status.value,
        cycles=result.cycles,
        iterations=result.iterations,
        cycle_lengths=result.cycle_lengths,
        counters=result.counters,
        stats=RunStats(wall_time_s=float(np.mean(times)), repetitions=repetitions, times=times),
        history=result.history,
        relres_true=relres,
        relerr=relerr,
    )


def _guarded(
    problem: Problem, spec: ProblemSpec, configuration: ConfigurationSpec, bench: BenchConfig
) -> RunRecord:
    try:
        config = configuration.solver_config(spec, bench.diagnostics)
    except (KrylovError, ValueError) as e:
        return RunRecord(problem.name, "?", "?", "error", error=str(e))
    try:
        return run_one(problem, config, bench.repetitions)
    except KrylovError as e:
        logger.warning("%s on %s failed: %s", config.label, problem.name, e)
        return RunRecord(problem.name, config.label, config.slug, "error", error=str(e))
    except Exception as e:
        logger.warning("%s on %s crashed: %r", config.label, problem.name, e)
        logger.debug("traceback", exc_info=True)
        message = f"{type(e).__name__}: {e}"
        return RunRecord(problem.name, config.label, config.slug, "error", error=message)


def execute(bench: BenchConfig, console: Optional[Console] = None) -> BenchOutcome:
    """Build every problem, then run all pairs on ``bench.workers`` threads."""
    outcome = BenchOutcome()
    built: list[tuple[Problem, ProblemSpec]] = []
    for spec in bench.problems:
        try:
            built.append((spec.build(bench.seed, bench.base_dir), spec))
        except (KrylovError, OSError) as e:
            logger.warning("problem %s skipped: %s", spec.name, e)
            outcome.problem_errors.append(ProblemError(spec.name, str(e)))
        except Exception as e:
            logger.warning("problem %s skipped: %r", spec.name, e)
            logger.debug("traceback", exc_info=True)
            outcome.problem_errors.append(ProblemError(spec.name, f"{type(e).__name__}: {e}"))

    pairs = [(p, spec, c) for p, spec in built for c in bench.configurations]
    if not pairs:
        return outcome

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=console or Console(stderr=True),
        transient=True,
    ) as progress:
        task = progress.add_task("Running solves...", total=len(pairs))
        with ThreadPoolExecutor(max_workers=bench.workers) as pool:
            futures = {
                pool.submit(_guarded, p, spec, c, bench): i
                for i, (p, spec, c) in enumerate(pairs)
            }
            finished: dict[int, RunRecord] = {}
            for future in as_completed(futures):
                finished[futures[future]] = future.result()
                progress.advance(task)

    # completion order depends on the thread schedule
    outcome.runs = [finished[i] for i in range(len(pairs))]
    return outcome


def result_rows(runs: list[RunRecord]) -> list[ResultRow]:
    """
    Result table rows, slowest first within each problem.

    accel_pct = 100 (1 - t / t_max) with t_max the slowest run of the same problem.
    Runs that raised are reported in the summary only.
    """
    rows: list[ResultRow] = []
    problems = list(dict.fromkeys(r.problem for r in runs))
    for name in problems:
        timed = [r for r in runs if r.problem == name and r.stats is not None]
        if not timed:
            continue
        t_max = max(r.stats.wall_time_s for r in timed if r.stats)
        timed.sort(key=lambda r: (-r.stats.wall_time_s if r.stats else 0.0, r.label))
        for r in timed:
            assert r.stats is not None
            t = r.stats.wall_time_s
            rows.append(
                ResultRow(
                    problem=name,
                    label=r.label,
                    time_s=t,
                    accel_pct=100.0 * (1.0 - t / t_max) if t_max > 0 else 0.0,
                    cycle_ct=r.cycles,
                    iter_ct=r.iterations,
                    a_ct=r.counters.matvec,
                    v_ct=r.counters.basis_eval,
                    sync_ct=r.counters.sync,
                    status=r.status,
                )
            )
    return rows
