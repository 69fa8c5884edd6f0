import pytest

_VERDICTS = []


@pytest.fixture(scope="session")
def verdict():
    """Record one acceptance line: ``verdict(number, ok, detail)``."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_VERDICTS):
        terminalreporter.write_line(line)
