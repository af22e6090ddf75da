import numpy as np
import pytest

from coagkin.grid import make_grid
from coagkin.kernels import KernelSpec, RatioSym, Zero


@pytest.fixture(scope="session")
def grid():
    """Default log grid on [1e-4, 60] with 512 nodes."""
    return make_grid("log", 1e-4, 60.0, 512)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid("log", 1e-4, 60.0, 256)


@pytest.fixture(scope="session")
def K2():
    return KernelSpec(0.0, Zero())


@pytest.fixture(scope="session")
def ratio_sym():
    return RatioSym(1.0, "two_over_s")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def band(grid, lo=0.1, hi=20.0):
    x = grid.nodes
    return (x >= lo) & (x <= hi)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
