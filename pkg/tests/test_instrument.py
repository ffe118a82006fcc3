"""Tests for counters and counting contexts."""

from concurrent.futures import ThreadPoolExecutor

from lowsync_krylov import requirement
from lowsync_krylov.instrument import (
    Counters,
    Tally,
    count_basis_eval,
    count_matvec,
    count_sync,
    counting,
    current,
    provisional,
    suspended,
)
from lowsync_krylov.types import SyncSource


@requirement("INS-001", "sync points are tallied per source")
def test_count_sync_by_source():
    counters = Counters()
    with counting(counters):
        count_sync(SyncSource.INNER_PROD)
        count_sync(SyncSource.INTRA_ORTHO)
        count_sync(SyncSource.INTRA_ORTHO, 4)
    assert counters.inner_prod == 1
    assert counters.intra_ortho == 5
    assert counters.sync == counters.inner_prod + counters.intra_ortho == 6


@requirement("INS-002", "matvec and weighted basis_eval counts")
def test_matvec_and_basis_eval():
    counters = Counters()
    with counting(counters):
        count_matvec()
        count_basis_eval(2)
        count_basis_eval()
    assert counters.matvec == 1
    assert counters.basis_eval == 3
    assert counters.sync == 0


@requirement("INS-003", "nothing is tallied outside a counting context")
def test_no_active_context():
    assert current() is None
    count_sync(SyncSource.INNER_PROD)
    count_matvec()

    counters = Counters()
    with counting(counters):
        assert current() is counters
        with suspended():
            assert current() is None
            count_sync(SyncSource.INNER_PROD)
            count_basis_eval(5)
        count_matvec()
    assert current() is None
    assert counters.as_dict()["sync"] == 0
    assert counters.matvec == 1
    assert counters.basis_eval == 0


@requirement("INS-004", "provisional work is committed or moved to the discarded tally")
def test_provisional_commit_and_discard():
    counters = Counters()
    with counting(counters):
        with provisional():
            count_sync(SyncSource.INNER_PROD)
            count_matvec()
        assert counters.sync == 1

        with provisional() as attempt:
            count_sync(SyncSource.INTRA_ORTHO)
            count_basis_eval(2)
            assert counters.intra_ortho == 0
            attempt.discard()
    assert counters.sync == 1
    assert counters.matvec == 1
    assert counters.discarded.intra_ortho == 1
    assert counters.discarded.basis_eval == 2


@requirement("INS-005", "as_dict exposes committed and discarded counts")
def test_as_dict_keys():
    counters = Counters(inner_prod=3, intra_ortho=2, matvec=4, basis_eval=7)
    counters.discarded.add(Tally(inner_prod=1))
    out = counters.as_dict()
    assert out["sync"] == 5
    assert out["sync_inner_prod"] == 3
    assert out["sync_intra_ortho"] == 2
    assert out["matvec"] == 4
    assert out["basis_eval"] == 7
    assert out["discarded_sync"] == 1
    assert out["discarded_matvec"] == 0


@requirement("INS-006", "each thread counts into its own context")
def test_thread_isolation():
    def work(times: int) -> int:
        counters = Counters()
        with counting(counters):
            for _ in range(times):
                count_sync(SyncSource.INNER_PROD)
        return counters.sync

    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(work, [10, 20, 30, 40]))
    assert results == [10, 20, 30, 40]


@requirement("INS-007", "committed work can be retracted into the discarded tally")
def test_retract_committed_work():
    counters = Counters()
    with counting(counters):
        with provisional():
            count_sync(SyncSource.INNER_PROD)
        with provisional() as attempt:
            count_sync(SyncSource.INNER_PROD)
            count_sync(SyncSource.INTRA_ORTHO)
            count_matvec()
            count_basis_eval(3)
    assert counters.sync == 3

    counters.retract(attempt.pending)
    assert counters.as_dict()["sync"] == 1
    assert counters.matvec == 0
    assert counters.basis_eval == 0
    assert counters.discarded == Tally(inner_prod=1, intra_ortho=1, matvec=1, basis_eval=3)
