import numpy as np
import pytest

from rlab.gp import GroundTruth
from rlab.kernel import KernelSpec


@pytest.fixture
def se02():
    return KernelSpec("se", 0.2)


def table(fn, n=2049, lo=0.0, hi=1.0):
    grid = np.linspace(lo, hi, n)
    return GroundTruth(grid, fn(grid))


@pytest.fixture
def quadratic():
    return table(lambda x: 1.0 - (x - 0.5) ** 2)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
