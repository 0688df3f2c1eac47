import pytest

ACCEPTANCE_LINES = []


def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE_LINES.append((number, f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
                             + (f"  [{detail}]" if detail else "")))
    return ok


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
