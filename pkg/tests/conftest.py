import os

import pytest
from hypothesis import HealthCheck, settings

from qhblowup.flow import Target
from qhblowup.infinity import find_horizon_equilibria
from qhblowup.scenarios import keyfitz_kranzer, lienard, two_fluid

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# pass/fail lines recorded by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def kk():
    return keyfitz_kranzer()


@pytest.fixture(scope="session")
def kk_field(kk):
    return kk.desing()


@pytest.fixture(scope="session")
def kk_equilibria(kk_field):
    return find_horizon_equilibria(kk_field)


@pytest.fixture(scope="session")
def kk_targets(kk_equilibria):
    return tuple(Target.from_equilibrium(e) for e in kk_equilibria)


@pytest.fixture(scope="session")
def lienard2():
    return lienard(2)


@pytest.fixture(scope="session")
def fluid():
    return two_fluid(1.0, 2.0)
