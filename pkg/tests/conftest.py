import pytest

RESULTS = {}


@pytest.fixture
def report():
    """Records ``(label, ok, detail)`` for the acceptance summary."""

    def record(label, ok, detail=""):
        RESULTS[label] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(RESULTS):
        ok, detail = RESULTS[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}")
