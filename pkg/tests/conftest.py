import numpy as np
import pytest
import sympy as sp
from hypothesis import HealthCheck, settings

from breather.media import dirichlet_medium, periodic_medium, step_medium

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def step():
    return step_medium(1, 1, sp.pi / 2, 1)


@pytest.fixture(scope="session")
def periodic():
    return periodic_medium(1, 9, sp.Rational(1, 2), sp.Rational(1, 2))


@pytest.fixture(scope="session")
def dirichlet():
    return dirichlet_medium(3 * sp.pi / 8, 1)


def random_sequence(rng, N, scale=1.0):
    from breather.seqspace import OddSequence
    return OddSequence(N, scale * rng.standard_normal((N + 1) // 2))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
