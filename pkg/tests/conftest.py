from __future__ import annotations

from contextlib import contextmanager

import pytest

from tpacas.auction import auction_group
from tpacas.group import toy_group

# criterion number -> (passed, title, note); printed at the end of the session
CRITERIA: dict[int, tuple[bool, str, str]] = {}


@contextmanager
def _criterion(number: int, title: str):
    notes: list[str] = []
    ok = False
    try:
        yield notes
        ok = True
    finally:
        CRITERIA[number] = (ok, title, "; ".join(notes))


@pytest.fixture
def criterion():
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, title, note = CRITERIA[number]
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
        terminalreporter.write_line(line + (f" ({note})" if note else ""))


@pytest.fixture(scope="session")
def toy():
    return toy_group()


@pytest.fixture(scope="session")
def group64():
    return auction_group(64, "tests")


@pytest.fixture(scope="session")
def group256():
    return auction_group(256, "tests")
