import numpy as np
import pytest

from prodhardy.grid import Axis
from prodhardy.operators import build_laplacian
from prodhardy.product import ProductOperatorPair


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_axis(n, boundary="dirichlet"):
    return Axis(n, 1.0 / n, 0.0, boundary)


def free_pair(n1, n2=None, boundary="dirichlet"):
    n2 = n1 if n2 is None else n2
    return ProductOperatorPair(build_laplacian(unit_axis(n1, boundary)),
                               build_laplacian(unit_axis(n2, boundary)))


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
