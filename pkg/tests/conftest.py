import math

import pytest
from hypothesis import HealthCheck, settings

from randconley.geometry import Grid, PhaseSpace

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    def record(n, ok, detail=""):
        ACCEPTANCE_LINES[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def unit_interval():
    return Grid(PhaseSpace.interval(-1.0, 1.0), 4)


@pytest.fixture
def circle8():
    return Grid(PhaseSpace.circle(2 * math.pi), 8)
