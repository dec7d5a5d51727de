from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from isoyamabe import IntegratorConfig, find_nodal, make_problem  # noqa: E402

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def config():
    return IntegratorConfig()


@pytest.fixture(scope="session")
def spec3():
    return make_problem(3, 2, 1, 1)


@pytest.fixture(scope="session")
def spec4():
    return make_problem(4, 2, 1, 2)


@pytest.fixture(scope="session")
def n4_solutions(spec4, config):
    """k -> NodalSolution for n=4, m1=1, m2=2 and k = 0..5."""
    return {k: find_nodal(spec4, config, k) for k in range(6)}


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
