"""Shared fixtures, oracle builders and the acceptance summary hook."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from peflow import DiscreteMeasure, InitialVelocity, Potential, SolverOptions, simulate, simulate_ep

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record_acceptance(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    return record_acceptance


# -- standard configurations -------------------------------------------------


def two_body():
    """Equal masses at 0 and 1 heading towards each other with speed 1."""
    return DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.5])), np.array([1.0, -1.0])


def harmonic_pair():
    """Equal masses at rest at +-1 under W(x) = x^2 / 2."""
    return DiscreteMeasure(np.array([-1.0, 1.0]), np.array([0.5, 0.5])), np.array([0.0, 0.0])


@pytest.fixture(scope="session")
def free_tm():
    rho0, v = two_body()
    return simulate(rho0, v, Potential.zero(), 1.0)


@pytest.fixture(scope="session")
def harmonic_tm():
    rho0, v = harmonic_pair()
    return simulate(rho0, v, Potential.quadratic(1.0), 2.0)


@pytest.fixture(scope="session")
def ep_tm():
    rho0, v = harmonic_pair()
    return simulate_ep(rho0, v, 5.0)


def random_instance(rng, n_max=16, lo=-1.0, hi=1.0):
    n = int(rng.integers(2, n_max + 1))
    x = np.sort(rng.uniform(lo, hi, n))
    m = rng.dirichlet(np.ones(n))
    v = rng.uniform(-1.0, 1.0, n)
    return DiscreteMeasure(x, m), v


def merge_time_of(tm, k=0):
    return tm.events[k].time


HALF_PI = 0.5 * math.pi
