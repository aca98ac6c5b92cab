import numpy as np
import pytest

from beltrami_lab.grid import Grid

# filled by tests/test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        def number(line):
            return int(line.split()[1].rstrip(":"))

        for line in sorted(ACCEPTANCE_LINES, key=number):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid64():
    return Grid(64, 4.0)


@pytest.fixture(scope="session")
def grid128():
    return Grid(128, 4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_field(grid, rng, mean_zero=True, band=None):
    v = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    if band is not None:
        spec = np.fft.fft2(v)
        spec[grid.lattice.modulus > band] = 0
        v = np.fft.ifft2(spec)
    if mean_zero:
        v = v - v.mean()
    return grid.field(v)
