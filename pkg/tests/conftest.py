import numpy as np
import pytest

from galext.core import SGrid, SpatialGrid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid1024():
    return SpatialGrid(1024, 40.0)


@pytest.fixture(scope="session")
def grid512():
    return SpatialGrid(512, 40.0)


@pytest.fixture(scope="session")
def grid256():
    return SpatialGrid(256, 40.0)


@pytest.fixture(scope="session")
def sgrid8():
    # mass quantum 1 when hbar = 1
    return SGrid(8, 2 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
