import numpy as np
import pytest

from qzeno import BathState, SpectralDensity


@pytest.fixture(scope="session")
def hydrogenic():
    return SpectralDensity.hydrogenic(549.5)


@pytest.fixture(scope="session")
def ohmic():
    return SpectralDensity.ohmic(500.0)


@pytest.fixture(scope="session")
def ohmic_bath(ohmic):
    return BathState(ohmic)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ohmic_corr(t, omega_c=500.0):
    """Zero-temperature ohmic correlation ``int G(w) e^{-i(w-1)t} dw`` in
    closed form (sign convention of the package: phase ``e^{+i t}``)."""
    t = np.asarray(t, dtype=float)
    return np.exp(1j * t) * omega_c ** 2 / (1.0 + 1j * omega_c * t) ** 2


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion.

    The lines are printed in the terminal summary so they appear in the
    normal ``pytest -v`` log; the test itself then asserts the outcome.
    """

    def report(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
