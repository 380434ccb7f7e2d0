import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion and return the verdict."""

    def _report(label, ok, detail):
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'} | {detail}"
        print(line)
        _LINES.append(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
