"""Shared fixtures.

The `criterion` fixture lets the gate tests in test_acceptance.py record one
summary line each; the hook below reprints those lines after the run so the
pass/fail ledger is visible without -s.
"""

import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        _LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        print(_LINES[-1])
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
