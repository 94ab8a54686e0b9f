import math

import numpy as np
import pytest

from backus_dipole.spectral import AxisymCoeffs, SphCoeffs

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_axisym(rng, L, decay=0.0):
    """Gaussian coefficients, optionally damped like ``(l+1)^-decay``."""
    return AxisymCoeffs(rng.standard_normal(L + 1) / (np.arange(L + 1) + 1.0) ** decay)


def random_general(rng, L, real_function=True):
    t = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    for l in range(L + 1):
        t[l, L] = rng.standard_normal()
        for m in range(1, l + 1):
            z = complex(rng.standard_normal(), rng.standard_normal())
            t[l, L + m] = z
            t[l, L - m] = (-1) ** m * z.conjugate() if real_function else complex(rng.standard_normal(), rng.standard_normal())
    return SphCoeffs(t)


def dipole_coeffs(L=1):
    c = np.zeros(L + 1)
    c[1] = math.sqrt(4 * math.pi / 3)
    return AxisymCoeffs(c)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
