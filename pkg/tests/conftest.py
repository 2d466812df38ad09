import numpy as np
import pytest

from drconformal.algebra import catalog
from drconformal.space import extend_solvable


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture
def rng():
    return philox(12345)


@pytest.fixture(scope="session")
def heis():
    return extend_solvable(catalog("heisenberg"))


@pytest.fixture(scope="session")
def cliff():
    return extend_solvable(catalog("clifford2"))


@pytest.fixture(scope="session")
def quat():
    return extend_solvable(catalog("quaternionic"))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
