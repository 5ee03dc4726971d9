"""Shared test infrastructure.

The acceptance tests record one line per criterion through the `criteria`
fixture; pytest_terminal_summary prints every recorded line at the end of
the run so the verdicts are visible without -s.
"""

from __future__ import annotations

import sys
from contextlib import contextmanager
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

_RECORDS: list[tuple[int, str, str]] = []


class CriterionRecorder:
    """Collects per-criterion verdict lines for the terminal summary."""

    @contextmanager
    def check(self, number: int, description: str):
        failures: list[str] = []
        try:
            yield failures
        except BaseException as exc:
            _RECORDS.append((number, description,
                             f"FAIL ({type(exc).__name__}: {exc})"))
            raise
        if failures:
            _RECORDS.append((number, description,
                             "FAIL (" + "; ".join(failures) + ")"))
            pytest.fail(f"criterion {number}: " + "; ".join(failures))
        _RECORDS.append((number, description, "PASS"))


@pytest.fixture(scope="session")
def criteria() -> CriterionRecorder:
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RECORDS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, verdict in sorted(_RECORDS):
        terminalreporter.write_line(
            f"criterion {number}: {verdict} - {description}")
