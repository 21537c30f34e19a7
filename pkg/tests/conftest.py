import pytest

CRITERIA = [f"A{i}" for i in range(1, 11)]
_results = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion; returns ``ok`` for asserting."""

    def report(name, ok, detail):
        _results[name] = (bool(ok), detail)
        return bool(ok)

    return report


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in CRITERIA:
        if name in _results:
            ok, detail = _results[name]
            terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"{name} NOT RUN")
