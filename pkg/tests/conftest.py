import sys

import pytest
from hypothesis import settings

from matrixgate import LogicalClock, example_bundle

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines, which per-test capture would hide."""
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)


@pytest.fixture
def bundle():
    return example_bundle()


@pytest.fixture
def clock():
    return LogicalClock()
