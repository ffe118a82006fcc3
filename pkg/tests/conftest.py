"""Pytest configuration for lowsync-krylov tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from lowsync_krylov.paradigm import Paradigm  # noqa: E402
from lowsync_krylov.problems import Problem, tridiag  # noqa: E402
from lowsync_krylov.types import ParadigmKind  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def tridiag_100() -> Problem:
    return tridiag(100)


@pytest.fixture(scope="session")
def tridiag_1000() -> Problem:
    return tridiag(1000)


@pytest.fixture(params=[ParadigmKind.CLASSICAL, ParadigmKind.GLOBAL], ids=["cl", "gl"])
def paradigm_kind(request: pytest.FixtureRequest) -> ParadigmKind:
    return request.param


@pytest.fixture
def classical2() -> Paradigm:
    return Paradigm(ParadigmKind.CLASSICAL, 2)


@pytest.fixture
def global2() -> Paradigm:
    return Paradigm(ParadigmKind.GLOBAL, 2)
