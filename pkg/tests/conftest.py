import numpy as np
import pytest

from hybridqm import HybridParams, make_grid

SQM_Q = 1.0 + 1e-8


@pytest.fixture
def grid():
    return make_grid(1024, -30.0, 30.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sqm():
    return HybridParams(SQM_Q, 2.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
