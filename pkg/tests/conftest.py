import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def _report(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA[number] = line
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
