"""
Counters for communication-relevant kernels and per-iteration history.

Counting is routed through a context variable, so kernels deep inside a skeleton can
report work without threading a counter object through every call. A solve activates
its own ``Counters`` with ``counting``; calls made outside any active context are not
tallied. Each thread and each solve sees only its own counters.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .types import SyncSource


@dataclass
class Tally:
    """Raw counts for one stretch of work."""
    inner_prod: int = 0
    intra_ortho: int = 0
    matvec: int = 0
    basis_eval: int = 0

    @property
    def sync(self) -> int:
        return self.inner_prod + self.intra_ortho

    def add(self, other: "Tally") -> None:
        self.inner_prod += other.inner_prod
        self.intra_ortho += other.intra_ortho
        self.matvec += other.matvec
        self.basis_eval += other.basis_eval

    def as_dict(self) -> dict[str, int]:
        return {
            "sync": self.sync,
            "sync_inner_prod": self.inner_prod,
            "sync_intra_ortho": self.intra_ortho,
            "matvec": self.matvec,
            "basis_eval": self.basis_eval,
        }


@dataclass
class Counters(Tally):
    """
    Committed counts of a solve.

    Work spent on an iteration that ended in a NaN-flag is not part of the committed
    tallies; it lands in ``discarded`` so nothing is silently lost.
    """
    discarded: Tally = field(default_factory=Tally)

    def retract(self, tally: Tally) -> None:
        """Move already committed work to ``discarded``."""
        self.inner_prod -= tally.inner_prod
        self.intra_ortho -= tally.intra_ortho
        self.matvec -= tally.matvec
        self.basis_eval -= tally.basis_eval
        self.discarded.add(tally)

    def as_dict(self) -> dict[str, int]:
        out = super().as_dict()
        out.update({f"discarded_{k}": v for k, v in self.discarded.as_dict().items()})
        return out


@dataclass
class ConvergenceRecord:
    """Diagnostics of one Arnoldi iteration."""
    cycle: int
    iteration: int               # global, across cycles
    relres_est: float
    relerr: Optional[float] = None
    kappa: Optional[float] = None
    loo: Optional[float] = None


@dataclass
class RunStats:
    """Wall time of repeated runs."""
    wall_time_s: float
    repetitions: int = 5
    times: list[float] = field(default_factory=list)


_active: ContextVar[Optional[Tally]] = ContextVar("lowsync_krylov_counters", default=None)


@contextmanager
def counting(counters: Counters) -> Iterator[Counters]:
    """Route all counts made inside the block to ``counters``."""
    token = _active.set(counters)
    try:
        yield counters
    finally:
        _active.reset(token)


@contextmanager
def suspended() -> Iterator[None]:
    """Stop counting inside the block (diagnostics)."""
    token = _active.set(None)
    try:
        yield
    finally:
        _active.reset(token)


class Attempt:
    """Handle for a provisional stretch of work, see ``provisional``."""

    def __init__(self) -> None:
        self.pending = Tally()
        self.discarded = False

    def discard(self) -> None:
        self.discarded = True


@contextmanager
def provisional() -> Iterator[Attempt]:
    """
    Buffer counts until the block exits.

    On exit the buffered counts are committed to the enclosing tally, or moved to the
    enclosing ``Counters.discarded`` if ``Attempt.discard`` was called.
    """
    parent = _active.get()
    attempt = Attempt()
    token = _active.set(attempt.pending if parent is not None else None)
    try:
        yield attempt
    finally:
        _active.reset(token)
        if parent is not None:
            if not attempt.discarded:
                parent.add(attempt.pending)
            elif isinstance(parent, Counters):
                parent.discarded.add(attempt.pending)


def count_sync(source: SyncSource, cost: int = 1) -> None:
    tally = _active.get()
    if tally is None:
        return
    if source is SyncSource.INNER_PROD:
        tally.inner_prod += cost
    else:
        tally.intra_ortho += cost


def count_matvec() -> None:
    tally = _active.get()
    if tally is not None:
        tally.matvec += 1


def count_basis_eval(weight: int = 1) -> None:
    tally = _active.get()
    if tally is not None:
        tally.basis_eval += weight


def current() -> Optional[Tally]:
    """The tally counts are currently routed to, if any."""
    return _active.get()
