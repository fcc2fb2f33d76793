import pathlib
import warnings

import pytest

from redmon import parse_kb
from redmon.dsl import TimestampAssignmentWarning

REPO = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"

# One line per acceptance criterion, filled in by tests/test_acceptance.py
# and echoed after the run (pytest's fd capture would otherwise swallow
# prints from inside the tests unless -s is given).
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rover_text() -> str:
    return (SCENARIOS / "rover.kb").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def rover(rover_text):
    """(kb, programs) of the shipped robot knowledge base."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TimestampAssignmentWarning)
        return parse_kb(rover_text)


@pytest.fixture(scope="session")
def triplex_text() -> str:
    return (SCENARIOS / "triplex.kb").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def triplex(triplex_text):
    return parse_kb(triplex_text)
