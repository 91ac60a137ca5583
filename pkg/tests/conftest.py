import dataclasses

import pytest

from patrolplan.scenario import GroundStation, Point2, generate_scenario
from patrolplan.trajectory import SolverConfig


@pytest.fixture(scope="session")
def scenario():
    """Default 20-point, 2-UAV layout."""
    return generate_scenario(3, k=20, n_uavs=2)


@pytest.fixture(scope="session")
def small_scenario():
    return generate_scenario(7, k=5, n_uavs=2)


@pytest.fixture(scope="session")
def one_station():
    """A single station at the centre of the area."""
    sc = generate_scenario(0, k=2)
    return dataclasses.replace(sc, stations=(GroundStation(1, Point2(500.0, 500.0), 100.0, 8e9),))


@pytest.fixture(scope="session")
def fast_solver():
    return SolverConfig(n_slots=12)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``."""

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
