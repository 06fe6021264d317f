import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgb import build_space
from qgb import funcs as fn
from qgb import qgeo as qg
from qgb import sublinear as sl

GRID = build_space({"kind": "grid2d"})
SQRT = build_space({"kind": "sqrt_rays"})
TREE = build_space({"kind": "tree", "degree": 4})
H, V = qg.Ray(SQRT, "horizontal"), qg.Ray(SQRT, "vertical")
B0, B1 = qg.Ray(TREE, "branch:0"), qg.Ray(TREE, "branch:1")
X = qg.Ray(GRID, "axis+x")
SHIFTED = qg.QuasiGeodesic(tuple((i, 1) for i in range(5000)), 1, 0)


def test_gauges_are_floored_at_one():
    assert sl.KappaSpec("sqrt")(0.25) == 1
    assert sl.KappaSpec("log")(0) == 1
    assert sl.KappaSpec("sqrt")(16) == 4
    assert sl.KappaSpec("power", {"p": 0.5})(9) == 3
    table = sl.KappaSpec("table", {"samples": [(0, 1), (10, 4)]})
    assert table(5) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        sl.KappaSpec("power", {"p": 1.5})
    with pytest.raises(ValueError):
        sl.KappaSpec("table", {"samples": [(2, 1), (1, 2)]})
    k = sl.KappaSpec("power", {"p": 0.3})
    assert sl.KappaSpec.from_json(k.to_json()) == k


def test_sublinearity():
    assert sl.is_sublinear(sl.KappaSpec("sqrt")).passed
    assert sl.is_sublinear(sl.KappaSpec("log")).passed
    assert not sl.is_sublinear(sl.KappaSpec("linear", {"slope": 0.5})).passed


@pytest.mark.parametrize("name", ["sqrt", "log"])
def test_majorant_of_concave_gauges_is_the_gauge(name):
    t = np.arange(1, 2 ** 14 + 1, dtype=float)
    k = sl.KappaSpec(name)(t)
    m = sl.concave_majorant(t, k)
    assert np.allclose(m.majorant, k) and m.Qm == pytest.approx(1)
    assert m.concave and m.monotone and m.sandwich


def test_sawtooth_majorant():
    t = np.arange(1, 2 ** 14 + 1, dtype=float)
    k = sl.sawtooth(t)
    m = sl.concave_majorant(t, k)
    assert m.concave and m.monotone and m.sandwich
    assert 1 < m.Qm <= 2
    assert np.all(k <= m.majorant + 1e-9) and np.all(m.majorant <= m.Qm * k + 1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=40))
def test_majorant_is_concave_monotone_and_above(vals):
    t = np.arange(1, len(vals) + 1, dtype=float)
    ks = np.maximum(np.array(vals), 1.0)
    m = sl.concave_majorant(t, ks)
    assert m.concave and m.monotone and m.sandwich
    # nondecreasing and above the samples: every later value dominates every earlier sample
    for i in range(len(t)):
        for j in range(i + 1, len(t)):
            assert m.majorant[j] >= ks[i] - 1e-9


def test_tracking_examples():
    v = sl.kappa_track(SQRT, H, V, sl.KappaSpec("sqrt"), 4096)
    assert v.bounded and v.C == pytest.approx(1.0)
    assert sl.kappa_track(GRID, X, SHIFTED, sl.KappaSpec("log"), 4096).bounded
    grow = sl.kappa_track(TREE, B0, B1, sl.KappaSpec("sqrt"), 512)
    assert grow.class_t == grow.class_norm == "growing"


def test_equivalence_of_normalisations():
    for s, g, h, kappa, T, cls in (
        (SQRT, H, V, sl.KappaSpec("sqrt"), 4096, "bounded"),
        (TREE, B0, B1, sl.KappaSpec("log"), 512, "growing"),
        (GRID, X, X, sl.KappaSpec("sqrt"), 4096, "bounded"),
    ):
        e = sl.tracking_equivalence_check(s, g, h, kappa, T)
        assert e.agree and e.verdict.class_norm == cls
    same = sl.tracking_equivalence_check(GRID, X, X, sl.KappaSpec("log"), 1024)
    assert max(same.verdict.sup_t) == 0
    saw = sl.tracking_equivalence_check(SQRT, H, V, sl.sawtooth, 4096)
    assert not saw.concave_input and saw.Qm <= 2 and saw.agree


def test_window_schedule_must_fit_the_rays():
    with pytest.raises(ValueError):
        sl.kappa_track(GRID, X, SHIFTED, sl.KappaSpec("sqrt"), 8192)


def test_quotients():
    q = sl.sublinear_quotient(SQRT, [H, V], [[0], [1]], sl.KappaSpec("sqrt"))
    assert q.classes == [[0, 1]]
    assert sl.sublinear_quotient(SQRT, [H, V], [[0], [1]], sl.KappaSpec("constant")).classes == [[0], [1]]
    tree_rays = [qg.Ray(TREE, f"branch:{b}") for b in range(4)]
    for name in ("sqrt", "log"):
        tq = sl.sublinear_quotient(TREE, tree_rays, [[0], [1], [2], [3]], sl.KappaSpec(name), T=512)
        assert tq.classes == [[0], [1], [2], [3]]
    assert sl.sublinear_quotient(GRID, [X, SHIFTED], [[0, 1]], sl.KappaSpec("sqrt")).classes == [[0, 1]]


def test_sublinear_slow_oscillation():
    k = sl.KappaSpec("sqrt")
    assert sl.test_kappa_slow_osc(GRID, fn.vanishing(1), k, [1, 2], [8, 16]).passed
    ind = sl.test_kappa_slow_osc(SQRT, fn.clopen_indicator("horizontal"), k, [2], [16, 32])
    assert not ind.passed and all(row[2] == 1 for row in ind.rows)
    assert sl.test_kappa_slow_osc(SQRT, fn.constant(5), k, [1, 4], [16]).passed
