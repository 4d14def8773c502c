import pytest

_criteria: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion."""

    def record(n, ok, detail):
        _criteria[n] = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_criteria[n])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        terminalreporter.write_line(_criteria[n])
