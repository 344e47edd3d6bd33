from __future__ import annotations

import sys
from math import gcd, lcm

import pytest

from torsionunits.tables import load_shipped


def cyclic_bundle_dict(n: int) -> dict:
    """Character table of the cyclic group of order n, classes g^0..g^(n-1)."""
    classes = [{"name": f"g{i}", "order": n // gcd(i, n), "size": 1} for i in range(n)]

    def value(j: int, i: int):
        e = (i * j) % n
        return 1 if e == 0 else {"conductor": n, "terms": [[e, 1]]}

    chars = [{"name": f"chi_{j + 1}", "values": [value(j, i) for i in range(n)]} for j in range(n)]
    exponent = 1
    for c in classes:
        exponent = lcm(exponent, c["order"])
    return {
        "group": f"C{n}",
        "order": n,
        "exponent": exponent,
        "classes": classes,
        "tables": [{"kind": "ordinary", "characters": chars}],
    }


@pytest.fixture(scope="session")
def mcl():
    return load_shipped("mcl")


@pytest.fixture(scope="session")
def a5():
    return load_shipped("a5")


def pytest_terminal_summary(terminalreporter):
    # acceptance criteria record one line each; show them even when output is captured
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
