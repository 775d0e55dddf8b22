import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    """Store a PASS/FAIL line for the acceptance summary and return whether it passed."""

    def record(number, name, passed, detail):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'} {name}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
