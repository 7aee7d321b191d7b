import numpy as np
import pytest

from adaptctl.lyapunov import NominalCertificate
from adaptctl.presets import APPENDIX_P, OMEGA0, V_EXAMPLE, ZETA
from adaptctl.system import LinearErrorSystem

SQRT2 = np.sqrt(2.0)
# Lyapunov Q of the example: -(A^T P + P A) with the exact P (P11 = 2.8 sqrt 2).
Q_EXAMPLE = np.array([[2.0, -0.8 * SQRT2], [-0.8 * SQRT2, 2.0]])
# The matrix quoted for Q in the build contract; its (2,2) entry is not what A and P give.
Q_CONTRACT = np.array([[2.0, -1.1314], [-1.1314, 2.4142]])

ACCEPTANCE_LINES = []


def random_hurwitz(rng, n):
    M = rng.normal(size=(n, n))
    shift = max(np.linalg.eigvals(M).real) + rng.uniform(0.1, 2.0)
    return M - shift * np.eye(n)


def random_spd(rng, n, lo=0.1):
    X = rng.normal(size=(n, n))
    return X @ X.T + lo * np.eye(n)


@pytest.fixture(scope="session")
def example_system():
    return LinearErrorSystem.second_order(OMEGA0, ZETA)


@pytest.fixture(scope="session")
def example_cert(example_system):
    return NominalCertificate.from_P(example_system.A, example_system.B, APPENDIX_P)


@pytest.fixture(scope="session")
def example_v():
    return np.array(V_EXAMPLE)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
