import numpy as np
import pytest

from multistop.io import generate_point_set
from multistop.precompute import build_table, plant_solution

PLANT = np.array([0.3, 0.12, 0.45])
DELTAS = (1.5, 2.5, 3.5)


@pytest.fixture(scope="session")
def small_table():
    pts = generate_point_set(24, seed=3, complex_points=True)
    return build_table(1.0, DELTAS, pts)


@pytest.fixture(scope="session")
def planted_table(small_table):
    return plant_solution(small_table, PLANT)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
