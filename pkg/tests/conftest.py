from __future__ import annotations

import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """record(criterion, ok, detail) logs one PASS/FAIL line for the summary."""

    def record(criterion: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {criterion}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
