import numpy as np
import pytest

from ftsynth.canondb import build_canon_db
from ftsynth.search import enumerate_candidates

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def db_by_depth():
    cache = {}

    def get(lprime):
        if lprime not in cache:
            cache[lprime] = build_canon_db(lprime)
        return cache[lprime]

    return get


@pytest.fixture(scope="session")
def db3(db_by_depth):
    return db_by_depth(3)


@pytest.fixture(scope="session")
def db10(db_by_depth):
    return db_by_depth(10)


@pytest.fixture(scope="session")
def cands15(db10):
    return enumerate_candidates(15, db10, shards=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
