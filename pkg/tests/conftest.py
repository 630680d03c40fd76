import pytest

# acceptance gate lines, printed once at the end of the run
GATES = {}


def record(number: int, name: str, ok: bool, detail: str = ""):
    GATES[number] = (name, bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not GATES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(GATES):
        name, ok, detail = GATES[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}  {detail}")
