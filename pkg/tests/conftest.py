"""Shared fixtures: small lattices and problems for both models."""

import math

import numpy as np
import pytest

from pfc.models import DiscreteEnergy, LandauBrazovskii, LifshitzPetrich
from pfc.phases import random_field
from pfc.spectral import GridShape, LatticeSpec


def ddqc_projection() -> np.ndarray:
    return np.array(
        [
            [1.0, math.cos(math.pi / 6.0), math.cos(math.pi / 3.0), 0.0],
            [0.0, math.sin(math.pi / 6.0), math.sin(math.pi / 3.0), 1.0],
        ]
    )


@pytest.fixture(scope="session")
def lb_model():
    return LandauBrazovskii(xi=0.1, tau=-2.0, gamma=2.0)


@pytest.fixture(scope="session")
def lp_model():
    return LifshitzPetrich(
        c=1.5, eps=-6.0, kappa=0.3, q1=1.0, q2=2.0 * math.cos(math.pi / 12.0)
    )


@pytest.fixture(scope="session")
def lb_lattice():
    """Cubic 8^3 grid scaled so the seeded shell sits at |k| = 1."""
    return LatticeSpec(np.eye(3) / math.sqrt(6.0), GridShape((8, 8, 8)))


@pytest.fixture(scope="session")
def lp_lattice():
    """8^4 grid with the 12-fold projection to the plane."""
    return LatticeSpec(np.eye(4), GridShape((8, 8, 8, 8)), ddqc_projection())


@pytest.fixture(scope="session")
def lb_problem(lb_model, lb_lattice):
    return DiscreteEnergy(lb_model, lb_lattice)


@pytest.fixture(scope="session")
def lp_problem(lp_model, lp_lattice):
    return DiscreteEnergy(lp_model, lp_lattice)


def hermitian_field(lattice, seed, scale=1.0):
    return random_field(lattice, scale=scale, seed=seed)


def mean_zero(field):
    out = field.copy()
    out.coeffs[(0,) * field.lattice.grid.ndim] = 0.0
    return out


# Populated by tests/test_acceptance.py; one line per criterion is printed
# after the run so the verdicts survive pytest's output capture.
ACCEPTANCE_RESULTS: list[tuple[float, str, str, str]] = []


def record_criterion(number: float, name: str, status: str, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((number, name, status, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, status, detail in sorted(ACCEPTANCE_RESULTS):
        line = f"criterion {num:g} ({name}): {status}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
