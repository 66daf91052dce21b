import numpy as np
import pytest

from sympcool.dynamics import DensityState, EmissionGeometry, FockMode, LevelScheme

ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store one verdict line; the terminal summary prints them in order."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def random_density(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20061)


@pytest.fixture
def small_mode():
    return FockMode(2 * np.pi * 2.05e6, 0.3, 6)


@pytest.fixture
def scheme():
    return LevelScheme()


@pytest.fixture
def geom():
    return EmissionGeometry()


@pytest.fixture
def thermal_ground(small_mode):
    from sympcool.thermometry import thermal_distribution
    p = thermal_distribution(0.8, small_mode.n_max).probabilities
    return DensityState.from_populations(p, 2)
