"""Acceptance batteries, one test per criterion.

Each test runs the named suite, prints a single PASS/FAIL line (outside
pytest's capture, so it shows up in ``pytest -v`` output) and then
asserts every check of the suite plus the 60 s wall-clock limit.

Run as a script to get just the summary lines:

    python tests/test_acceptance.py
"""

import sys

import pytest

from qgb.suites import run_suite

LIMIT_S = 60.0

CRITERIA = [
    (1, "fan-oracle", "fan counts match the brute-force enumerator"),
    (2, "grid-one-point", "grid rays form one class with validated witnesses"),
    (3, "tree-separation", "tree branches separate; tree is 0-hyperbolic"),
    (4, "wedge-flats", "wedge of flats: 4 classes, one flat merges"),
    (5, "sqrt-rays", "square-root rays: 2 / 1 classes, indicator, quotient"),
    (6, "product-trivial", "products: (2,2) concatenation and one class"),
    (7, "block-union", "block union merges into one class"),
    (8, "function-suite", "function tests"),
    (9, "constant-tracking", "limit, approach and net constants"),
    (10, "sublinear", "majorants, tracking agreement and ends"),
]


def _line(n, title, res) -> str:
    ok = res.status == "pass" and res.seconds < LIMIT_S
    bad = [c.name for c in res.checks if c.status != "pass"]
    tail = f" -- failing: {'; '.join(bad)}" if bad else ""
    return f"criterion {n:2d} {'PASS' if ok else 'FAIL'} [{res.seconds:5.1f}s] {title}{tail}"


@pytest.mark.parametrize("n,name,title", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_criterion(n, name, title, capsys):
    res = run_suite(name)
    with capsys.disabled():
        print("\n" + _line(n, title, res))
    failing = {c.name: c.detail for c in res.checks if c.status != "pass"}
    assert not failing, failing
    assert res.seconds < LIMIT_S


def main() -> int:
    worst = 0
    for n, name, title in CRITERIA:
        res = run_suite(name)
        print(_line(n, title, res), flush=True)
        if res.status != "pass" or res.seconds >= LIMIT_S:
            worst = 1
    return worst


if __name__ == "__main__":
    sys.exit(main())
