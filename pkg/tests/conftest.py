import math

import pytest

from rqtraj.model import Microstate, ParticleSpec, UnitSystem

SQRT2 = math.sqrt(2.0)

# the 20 microstates used by the closure checks
GRID = [Microstate(a, b) for a in (0.5, 1.0, 2.0, 3.0, -1.0) for b in (-1.0, 0.0, 0.5, 1.0)]


@pytest.fixture
def natural():
    return UnitSystem()


@pytest.fixture
def massive():
    return ParticleSpec(1.0, SQRT2)


@pytest.fixture
def photon():
    return ParticleSpec(0.0, 2.0)


@pytest.fixture
def tunneling():
    return ParticleSpec(1.0, 0.8)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(n, title, ok, detail)."""

    def record(n, title, ok, detail):
        line = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
