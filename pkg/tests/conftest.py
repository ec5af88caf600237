import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from contactgeo.hamiltonian import (AutonomousHamiltonian, QuadraticCore, RadialHamiltonian, SumHamiltonian,
                                    SupportBox, compute_B0, make_radial_bump, plateau)

settings.register_profile("ci", deadline=None, max_examples=25, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("ci")

# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


class QuadraticForm(AutonomousHamiltonian):
    """H(p) = p.M p / 2 on a declared box (not compactly supported; for pointwise Hessian checks only)."""

    def __init__(self, M):
        M = np.asarray(M, dtype=float)
        super().__init__(M.shape[0] // 2, SupportBox.cube(np.zeros(M.shape[0]), 1.0))
        self.M = M

    def value(self, p):
        p = np.asarray(p, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", p, self.M, p)

    def gradient(self, p):
        return np.asarray(p, dtype=float) @ self.M.T

    def hessian(self, p):
        return np.broadcast_to(self.M, np.shape(p) + (self.M.shape[0],)).copy()


def ring_hamiltonian(amplitude=0.05):
    """Zero on the disk |p| < 0.5 (an interior flat region), a plateau ring, zero beyond |p| = sqrt(1.25)."""
    def prof(u):
        f, f1, f2 = plateau(u, 0.5, 1.0, 0.25)
        return amplitude * f, amplitude * f1, amplitude * f2
    return RadialHamiltonian(1, prof, radius=math.sqrt(1.25) + 1e-9)


@pytest.fixture(scope="session")
def bump25():
    return make_radial_bump(compute_B0(2.5), 2.5)


@pytest.fixture(scope="session")
def bump_b4():
    return make_radial_bump(4.0, 2.5)


@pytest.fixture(scope="session")
def two_bump():
    """Disjoint bumps with maxima 1.2 and 2.5."""
    return SumHamiltonian([make_radial_bump(compute_B0(1.2), 1.2, center=[-3.0, 0.0]),
                           make_radial_bump(compute_B0(2.5), 2.5, center=[3.0, 0.0])])


@pytest.fixture(scope="session")
def signed_bump():
    """max 1, min -2 on disjoint supports."""
    return SumHamiltonian([make_radial_bump(compute_B0(1.0), 1.0, center=[-3.0, 0.0]),
                           make_radial_bump(compute_B0(2.0), 2.0, center=[3.0, 0.0])], [1.0, -1.0])


@pytest.fixture(scope="session")
def core2():
    return QuadraticCore(2.0, 2.0, 2.0)


@pytest.fixture(scope="session")
def core7():
    return QuadraticCore(7.0, 1.0, 4.0)
