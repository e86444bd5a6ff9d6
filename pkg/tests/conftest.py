import pytest

from fastreact.core import build_grid, p1_problem

VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        VERDICTS.append(line)
        print(line)
        return ok

    return record


@pytest.fixture
def small_p1():
    return p1_problem(k=1e3, points=101, T=0.02)


@pytest.fixture
def line_grid():
    return build_grid((-1.0, 1.0), 101)
