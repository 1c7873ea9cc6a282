import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_GATE_LINES: dict[int, str] = {}


@pytest.fixture
def gate():
    """Record one acceptance verdict, print it, and fail the test when it is red."""

    def record(num: int, name: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        _GATE_LINES[num] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _GATE_LINES:
        terminalreporter.section("acceptance")
        for num in sorted(_GATE_LINES):
            terminalreporter.write_line(_GATE_LINES[num])
