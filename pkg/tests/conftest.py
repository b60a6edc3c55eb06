import warnings

import pytest

from sqha.dynamics import StepSizeWarning

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _quiet_step_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        yield


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    def record(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
