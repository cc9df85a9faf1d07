from __future__ import annotations

import pytest

from saddlenode.models import builtin
from saddlenode.saddle_node import locate_saddle_node

# filled by test_acceptance; printed once at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def stommel():
    return builtin("stommel1d")


@pytest.fixture(scope="session")
def stommel_sn(stommel):
    return locate_saddle_node(stommel, 0.9, 0.95)


@pytest.fixture(scope="session")
def cubic_nf():
    """x' = mu - x^2 + 0.3 x^3 and its fold at the origin."""
    f = builtin("normalform", a=0.3)
    return f, locate_saddle_node(f, 0.01, 0.01)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
