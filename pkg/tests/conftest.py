import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_RESULTS: list[str] = []


def record(label: str, ok: bool, detail: str = "") -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
    _RESULTS.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in _RESULTS:
        terminalreporter.write_line(line)
