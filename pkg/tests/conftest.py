import numpy as np
import pytest

from cascadehar.signal import Segment


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ramp_segment():
    """125 rows at 25 Hz; row i holds (i, -i) so selected indices are visible."""
    rows = np.arange(125, dtype=float)
    return Segment(np.column_stack([rows, -rows]), 25)


ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        ACCEPTANCE_RESULTS[name] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (outcome, duration) in sorted(ACCEPTANCE_RESULTS.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({duration:.2f} s)")
