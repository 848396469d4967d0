import math
import random

import pytest

from nonadaptive.params import ProblemShape


def trial_division_is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m % 2 == 0:
        return m == 2
    f = 3
    while f * f <= m:
        if m % f == 0:
            return False
        f += 2
    return True


def shape_grid() -> list[ProblemShape]:
    """Valid shapes (s >= 2n, u > n) spanning the regimes used by the bound checks."""
    grid = []
    for n in (1, 2, 3, 5, 16, 100, 256, 1000):
        for u_ratio in (2, 3, 10, 64, 1000, 2**20):
            for s_ratio in (2, 3, 4, 5, 8, 16):
                u = n * u_ratio
                grid.append(ProblemShape(u, n, n * s_ratio, max(1, math.ceil(math.log2(u)))))
    return grid


@pytest.fixture
def rng():
    return random.Random(20261015)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
