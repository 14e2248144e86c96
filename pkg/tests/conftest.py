"""Shared pytest wiring.

The acceptance module records one line per top-level check; the hook below
prints them as a block at the end of the run so the verdicts are visible
even when every test passes.
"""

import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Callable the acceptance tests use to register their verdict line."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
