from __future__ import annotations

import pytest

from dpdmarket import bundled_case, import_case

# Lines of the form "CRITERION n: PASS|FAIL|SKIP ..." recorded by the acceptance suite.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def three_bus():
    return import_case(bundled_case("three_bus"))


@pytest.fixture
def fig1():
    return import_case(bundled_case("fig1"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
