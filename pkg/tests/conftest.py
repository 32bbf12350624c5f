import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Recorder for acceptance criteria; the lines are repeated in the terminal summary."""

    def record(n, ok, detail, seconds, budget=None):
        in_time = budget is None or seconds < budget
        status = "PASS" if ok and in_time else "FAIL"
        timing = f"{seconds:.1f} s" + (f" of {budget:.0f} s" if budget is not None else "")
        line = f"criterion {n:2d}: {status}  {detail}  [{timing}]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
        assert in_time, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
