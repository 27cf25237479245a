import pytest

from acceptance_log import LINES


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line and fail the test when the check does not hold."""

    def check(number: int, name: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        LINES.append(f"criterion {number} [{status}] {name}" + (f": {detail}" if detail else ""))
        print(LINES[-1])
        assert ok, LINES[-1]

    return check
