"""
Benchmark configuration loading.

A benchmark file is TOML::

    repetitions = 5
    diagnostics = "iteration"      # none | cycle | iteration
    output = "results"             # relative to this file
    seed = 0
    workers = 1

    [[problems]]
    name = "tridiag"               # preset; explicit keys override it

    [[problems]]
    name = "1138_bus"
    path = "matrices/1138_bus.mtx"

    [[configurations]]
    paradigm = "classical"
    skeleton = "bcgs_pip"
    muscle = "cholqr"              # optional

Configuration entries are validated one by one. An illegal entry is kept as a
``RejectedConfiguration`` instead of failing the whole file.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigurationError
from .paradigm import Paradigm, resolve_muscle
from .problems import Problem, ilu0, lapl_2d, load_problem, tridiag
from .solver import SolverConfig
from .types import DiagnosticsLevel, ModificationKind, MuscleKind, ParadigmKind, SkeletonKind

logger = logging.getLogger(__name__)

GENERATED = ("tridiag", "lapl_2d")

# Benchmark parameter table; SuiteSparse entries still need a local ``path``.
PRESETS: dict[str, dict[str, Any]] = {
    "tridiag": {"n": 1000, "s": 2, "m": 70, "tol": 1e-10, "modification": "fom"},
    "1138_bus": {"s": 5, "m": 30, "tol": 1e-6, "modification": "gmres", "preconditioner": "ilu0"},
    "circuit_2": {"s": 5, "m": 10, "tol": 1e-6, "modification": "gmres", "preconditioner": "ilu0"},
    "rajat03": {"s": 5, "m": 10, "tol": 1e-6, "modification": "gmres", "preconditioner": "ilu0"},
    "Kaufhold": {"s": 5, "m": 10, "tol": 1e-6, "modification": "gmres"},
    "t2d_q9": {"s": 5, "m": 10, "tol": 1e-6, "modification": "gmres"},
    "lapl_2d": {"nx": 100, "s": 10, "m": 25, "tol": 1e-6, "modification": "fom"},
}


class ProblemSpec(BaseModel):
    """One problem of the benchmark with its solver parameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    path: Optional[Path] = None
    n: Optional[int] = Field(default=None, ge=2)
    nx: Optional[int] = Field(default=None, ge=2)
    s: int = Field(ge=1)
    m: int = Field(ge=1)
    tol: float = Field(gt=0)
    modification: ModificationKind = ModificationKind.NONE
    preconditioner: Literal["none", "ilu0"] = "none"
    max_cycles: int = Field(default=50, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _apply_preset(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("name") in PRESETS:
            return {**PRESETS[data["name"]], **data}
        return data

    @model_validator(mode="after")
    def _check_source(self) -> "ProblemSpec":
        if self.name == "tridiag" and self.n is None:
            raise ConfigurationError("tridiag needs n")
        if self.name == "lapl_2d" and self.nx is None:
            raise ConfigurationError("lapl_2d needs nx")
        if self.name not in GENERATED and self.path is None:
            raise ConfigurationError(f"problem {self.name!r} needs a path to a Matrix Market file")
        return self

    def build(self, seed: int, base: Optional[Path] = None) -> Problem:
        """Construct the problem; file paths are taken relative to ``base``."""
        if self.path is not None:
            path = self.path if base is None or self.path.is_absolute() else base / self.path
            precond = None if self.preconditioner == "none" else self.preconditioner
            return load_problem(path, self.s, seed=seed, preconditioner=precond, name=self.name)
        if self.name == "tridiag":
            assert self.n is not None
            problem = tridiag(self.n)
            if self.s != problem.s:
                raise ConfigurationError(f"tridiag has s = 2, got s = {self.s}")
        else:
            assert self.nx is not None
            problem = lapl_2d(self.nx, self.s, seed)
        if self.preconditioner == "ilu0":
            problem.precond = ilu0(problem.A)
        return problem


class ConfigurationSpec(BaseModel):
    """ip-skel∘(musc); parameters that depend on the problem are filled in later."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    paradigm: ParadigmKind = ParadigmKind.CLASSICAL
    skeleton: SkeletonKind
    muscle: Optional[MuscleKind] = None

    @model_validator(mode="after")
    def _check_legal(self) -> "ConfigurationSpec":
        resolve_muscle(self.skeleton, Paradigm(self.paradigm, 1), self.muscle)
        return self

    def solver_config(self, problem: ProblemSpec, diagnostics: DiagnosticsLevel) -> SolverConfig:
        return SolverConfig(
            skeleton=self.skeleton,
            paradigm=self.paradigm,
            muscle=self.muscle,
            modification=problem.modification,
            m=problem.m,
            tol=problem.tol,
            max_cycles=problem.max_cycles,
            diagnostics=diagnostics,
        )


class RejectedConfiguration(BaseModel):
    entry: dict[str, Any]
    reason: str


class BenchConfig(BaseModel):
    """A whole benchmark run."""

    model_config = ConfigDict(extra="forbid")

    repetitions: int = Field(default=5, ge=1)
    diagnostics: DiagnosticsLevel = DiagnosticsLevel.NONE
    output: Path = Path("results")
    seed: int = 0
    workers: int = Field(default=1, ge=1)
    problems: list[ProblemSpec] = Field(default_factory=list)
    configurations: list[ConfigurationSpec] = Field(default_factory=list)
    rejected: list[RejectedConfiguration] = Field(default_factory=list)
    base_dir: Optional[Path] = None


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    where = ".".join(str(p) for p in err["loc"])
    return f"{where}: {err['msg']}" if where else err["msg"]


def load_config(path: Path) -> BenchConfig:
    """
    Read a TOML benchmark file.

    Raises ``OSError`` when the file cannot be read and ``ConfigurationError`` when it
    is not valid TOML or a top-level key or problem entry is invalid.
    """
    with path.open("rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"{path}: {e}") from e

    entries = raw.pop("configurations", [])
    if not isinstance(entries, list):
        raise ConfigurationError(f"{path}: 'configurations' must be an array of tables")
    accepted: list[ConfigurationSpec] = []
    rejected: list[RejectedConfiguration] = []
    for entry in entries:
        try:
            accepted.append(ConfigurationSpec.model_validate(entry))
        except ValidationError as e:
            reason = _first_error(e)
            logger.warning("rejected configuration %s: %s", entry, reason)
            record = entry if isinstance(entry, dict) else {"value": entry}
            rejected.append(RejectedConfiguration(entry=record, reason=reason))

    try:
        config = BenchConfig.model_validate(
            {**raw, "configurations": accepted, "rejected": rejected,
             "base_dir": path.resolve().parent}
        )
    except ValidationError as e:
        raise ConfigurationError(f"{path}: {_first_error(e)}") from e
    logger.debug(
        "loaded %s: %d problems, %d configurations, %d rejected",
        path, len(config.problems), len(config.configurations), len(rejected),
    )
    return config
