import os

import pytest
from hypothesis import HealthCheck, settings

from dynred.corpus import BENCHMARKS, load
from dynred.lang import parse_program

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def prog(text: str):
    return parse_program(text)


@pytest.fixture(scope="session")
def corpus():
    return {name: load(name) for name in BENCHMARKS}


# Two-location loop: alpha l1 -> l2, beta l2 -> l1.
LOOP2 = """
var x: int[0..1] = 0;
thread T {
  l1: x := 1 goto l2;
  l2: x := 0 goto l1;
}
"""

# The racing-writers pair without its final assertion: 14 reachable states.
FIG4_BARE = """
var x: int[0..2] = 0;
var y: int[0..2] = 0;
thread T1 {
  a1: x := 0 goto a2;
  a2: y := 2 goto end;
}
thread T2 {
  b1: y := 1 goto b2;
  b2: x := y goto end;
}
"""


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config.addinivalue_line("markers", "slow: runs for more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
