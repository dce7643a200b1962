"""Shared fixtures, plus a terminal summary for the acceptance checklist.

Acceptance tests record one (label, passed, detail) row each through the
``acceptance`` fixture before asserting, so the summary prints a PASS or
FAIL line per criterion even when some of them fail.
"""

import pytest


def pytest_configure(config):
    config._acceptance_rows = []


@pytest.fixture
def acceptance(request):
    rows = request.config._acceptance_rows

    def record(label: str, ok: bool, detail: str = ""):
        rows.append((label, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = getattr(config, "_acceptance_rows", [])
    if not rows:
        return
    tr = terminalreporter
    tr.write_sep("-", "acceptance checklist")
    for label, ok, detail in rows:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {label}"
        if detail:
            line += f"  ({detail})"
        tr.write_line(line, green=ok, red=not ok)
