import numpy as np
import pytest
from hypothesis import settings

from diurnalvol.preavg import ReturnGrid, choose_window, pre_average

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def make_series(returns, theta=1.0 / 3.0):
    g = ReturnGrid(np.asarray(returns, dtype=float))
    return pre_average(g, choose_window(g.n, theta))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
