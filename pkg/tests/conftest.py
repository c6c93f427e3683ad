import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

import mixchar as mc  # noqa: E402


@pytest.fixture(scope="session")
def ts():
    return mc.from_network(mc.WeightedNetwork.from_edges([["x", "y", 1.0]]), name="TS")


@pytest.fixture(scope="session")
def p3():
    return mc.from_matrix([[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]], states=["a", "b", "c"], name="P3")


@pytest.fixture(scope="session")
def weighted_tree():
    return mc.random_tree(7, seed=11)


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol * max(1.0, abs(b))


LN2 = math.log(2)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
