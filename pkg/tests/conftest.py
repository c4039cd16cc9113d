import numpy as np
import pytest

from radbilap.grid import build_grid

# acceptance lines collected by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(':'))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid5():
    return build_grid(5)


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(5, M=512)


def bump(grid, c=1.0, w=0.5):
    """Gaussian bump in log r, zero at r_max."""
    s = np.log(grid.nodes)
    u = np.exp(-(((s - np.log(c)) / w) ** 2))
    u[-1] = 0.0
    return u
