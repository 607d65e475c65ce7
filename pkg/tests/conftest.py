import numpy as np
import pytest

from wide_solver import (
    ConstraintSet,
    ProblemSpec,
    SpatialField,
    SpatialGrid,
    SweepPlan,
    TimeGrid,
    preset,
    sweep,
)

SCHEDULE = (0.4, 0.2, 0.1, 0.05)


def sine_data(grid):
    w0 = SpatialField(grid, np.sin(grid.x))
    w1 = SpatialField(grid, np.zeros(grid.nodes))
    return ConstraintSet(w0, w1)


def problem_for(name, horizon=1.0, steps=400, nodes=64, schedule=SCHEDULE):
    grid = SpatialGrid(2 * np.pi, nodes)
    p = preset(name)
    return ProblemSpec(p.energy, p.dissipation, p.kappa, TimeGrid(horizon, steps), sine_data(grid), schedule, name)


@pytest.fixture(scope="session")
def grid64():
    return SpatialGrid(2 * np.pi, 64)


@pytest.fixture(scope="session")
def wave_problem():
    return problem_for("wave")


@pytest.fixture(scope="session")
def wave_sweep(wave_problem):
    return sweep(SweepPlan(SCHEDULE), wave_problem)


@pytest.fixture(scope="session")
def telegraph_problem():
    return problem_for("telegraph")


@pytest.fixture(scope="session")
def telegraph_sweep(telegraph_problem):
    return sweep(SweepPlan(SCHEDULE), telegraph_problem)


ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"[{number:2d}] {'PASS' if passed else 'FAIL'}  {title}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{number:2d}] {'PASS' if passed else 'FAIL'}  {title}  {detail}")
