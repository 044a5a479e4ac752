from __future__ import annotations

from functools import lru_cache
from pathlib import Path

import pytest

from tesstree.atd import load_atd
from tesstree.rulegen import learn

DATA = Path(__file__).resolve().parents[1] / "src" / "tesstree" / "data"

REGULAR_SUITE = ["73", "44", "63", "54", "45", "37"]
MULTI_SUITE = ["488", "3636", "31414", "stripes5"]
SUITE = REGULAR_SUITE + MULTI_SUITE

# criterion name -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@lru_cache(maxsize=None)
def atd_of(name: str):
    return load_atd(DATA / f"{name}.atd")


@lru_cache(maxsize=None)
def learned(name: str):
    """Learned structure and stats, shared across tests (callers must not mutate)."""
    return learn(atd_of(name))


@pytest.fixture
def suite_atd():
    return atd_of


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
