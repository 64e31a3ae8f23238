import sys

import pytest

from tabs import load_bundled
from tabs.cipm import cipm, cipm_network
from tabs.constraints import Var
from tabs.dsl import parse_constraints

X, Y, Z = Var("x", True), Var("y", True), Var("z", True)
N = Var("n")


def cs(text: str):
    """Constraint set over clocks x, y, z and integers n, m."""
    return parse_constraints(text, clocks="xyz", ints=("n", "m"))


@pytest.fixture(scope="session")
def ex1():
    return load_bundled("ex1.ta").components[0]


@pytest.fixture(scope="session")
def ex1_result(ex1):
    return cipm(ex1)


@pytest.fixture(scope="session")
def ex2():
    return load_bundled("ex2.ta")


@pytest.fixture(scope="session")
def ex2_result(ex2):
    return cipm_network(ex2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])
