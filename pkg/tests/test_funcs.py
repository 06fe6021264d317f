import math

import numpy as np
import pytest

from qgb import build_space
from qgb import funcs as fn
from qgb import qgeo as qg

GRID = build_space({"kind": "grid2d"})
SQRT = build_space({"kind": "sqrt_rays"})
TREE = build_space({"kind": "tree", "degree": 4})


def test_point_values():
    assert fn.eval_function(fn.vanishing(1), GRID, (0, 0)) == 1
    ind = fn.clopen_indicator("horizontal")
    assert fn.eval_function(ind, SQRT, (9, 0)) == 1
    assert fn.eval_function(ind, SQRT, (0, 9)) == 0
    assert fn.eval_function(fn.angle_probe(), GRID, (1, 1)) == pytest.approx(1 / 8)


def test_values_match_pointwise_evaluation():
    pts = GRID.ball((0, 0), 4)
    for f in (fn.vanishing(0.5), fn.angle_probe(), fn.series([(0.5, fn.vanishing(1)), (0.25, fn.constant(2))])):
        assert np.allclose(fn.values(f, GRID, pts), [fn.eval_function(f, GRID, p) for p in pts])


def test_func_spec_round_trip():
    f = fn.series([(0.5, fn.vanishing(2)), (0.5, fn.custom_table({"[1, 0]": 3.0}, 1.0))])
    assert fn.FuncSpec.from_json(f.to_json()) == f
    with pytest.raises(ValueError):
        fn.FuncSpec.from_json({"kind": "mystery"})


def test_indicator_needs_a_space_with_the_region():
    with pytest.raises(Exception):
        fn.eval_function(fn.clopen_indicator("horizontal"), GRID, (1, 0))


def test_slow_oscillation_examples():
    rep = fn.test_slowly_oscillating(GRID, fn.vanishing(1), [4, 8, 16], 2)
    assert rep.passed
    assert all(s <= 2 / r for s, r in zip(rep.sups, rep.radii))
    ind = fn.test_slowly_oscillating(SQRT, fn.clopen_indicator("horizontal"), [10, 20, 40], 3)
    assert ind.sups == [0, 0, 0]
    ang = fn.test_slowly_oscillating(GRID, fn.angle_probe(), [4, 8, 16, 32], 1, eps=0.05)
    assert ang.sups == sorted(ang.sups, reverse=True) and ang.passed


def test_cone_diameter_test_on_the_grid():
    x = qg.Ray(GRID, "axis+x")
    van = fn.test_geom_slow_osc(GRID, fn.vanishing(1), [x], 2, [4, 10, 20], 0.15)
    assert van.passed
    row = van.rows[-1]
    assert row.m == 20 and row.upper < 0.15 and row.lower <= row.upper
    ang = fn.test_geom_slow_osc(GRID, fn.angle_probe(), [x], 2, [1, 2, 3, 4], 0.2)
    assert ang.verdict == "fail"
    assert all(r.exhausted and r.lower >= 0.2 for r in ang.rows)


def test_indicator_cone_diameter_is_zero_past_the_gate_scale():
    rays = [qg.Ray(SQRT, "horizontal"), qg.Ray(SQRT, "vertical")]
    rep = fn.test_geom_slow_osc(SQRT, fn.clopen_indicator("horizontal", "vertical"), rays, 2, [24], 0.1)
    assert rep.passed
    assert all(r.upper == 0 and r.certificate == "one-sided" for r in rep.rows)


def test_limits_along_rays():
    x = qg.Ray(GRID, "axis+x")
    van = fn.limit_along_ray(GRID, fn.vanishing(1), x, [1000, 2000])
    assert van.certified and van.value == pytest.approx(0, abs=1e-3)
    assert van.bound is not None and van.bound < 1e-3
    h = fn.limit_along_ray(SQRT, fn.clopen_indicator("horizontal"), qg.Ray(SQRT, "horizontal"), [100])
    v = fn.limit_along_ray(SQRT, fn.clopen_indicator("horizontal"), qg.Ray(SQRT, "vertical"), [100])
    assert (h.value, v.value) == (1, 0) and h.certified and v.certified
    # constant along the ray even though the cone test fails
    ang = fn.limit_along_ray(GRID, fn.angle_probe(), x, [10])
    assert ang.certified and ang.value == 0


def test_non_cauchy_sequences_are_flagged():
    wobble = fn.custom_table({json_key: 1.0 for json_key in (f"[{i}, 0]" for i in range(0, 5000, 2))}, 0.0)
    lim = fn.limit_along_ray(GRID, wobble, qg.Ray(GRID, "axis+x"), [100, 1000])
    assert not lim.certified


def test_bounded_approach_limits():
    x = qg.Ray(GRID, "axis+x")
    seq = [qg.geodesic_to(GRID, (n, 1)) for n in range(5, 300)]
    rep = fn.test_bounded_approach_limit(GRID, fn.vanishing(1), seq, x, 2, 0.01)
    assert rep.status == "pass" and rep.limit == pytest.approx(0, abs=1e-3)
    h = qg.Ray(SQRT, "horizontal")
    pre = [h.materialize(n) for n in range(2, 200)]
    rep = fn.test_bounded_approach_limit(SQRT, fn.clopen_indicator("horizontal"), pre, h, 1, 1e-9)
    assert rep.status == "pass" and rep.limit == 1
    diag = [qg.geodesic_to(GRID, (n, n), "stair") for n in range(5, 100)]
    assert fn.test_bounded_approach_limit(GRID, fn.angle_probe(), diag, x, 2, 0.01).status == "not_applicable"


def test_uniform_limits():
    terms = [fn.vanishing(1 / n) for n in range(1, 41)]
    weights = [2.0 ** -n for n in range(1, 41)]
    res = fn.uniform_limit(terms, weights, 10)
    assert res.error_bound == pytest.approx(sum(weights[10:]))
    rep = fn.test_geom_slow_osc(GRID, res.func, [qg.Ray(GRID, "axis+x")], 2, [10, 30, 60], 0.15)
    assert rep.passed
    single = fn.vanishing(3)
    assert fn.uniform_limit([single], [1]).func == single
    consts = fn.uniform_limit([fn.constant(1 + 1 / n) for n in range(1, 20)], [0.5 ** n for n in range(1, 20)])
    assert consts.func.kind == "constant"
    assert fn.test_geom_slow_osc(GRID, consts.func, [qg.Ray(GRID, "axis+y")], 2, [2], 1e-9).passed


def test_tail_oscillation_bounds():
    assert fn.tail_oscillation(fn.vanishing(1), 9) == pytest.approx(0.1)
    assert fn.tail_oscillation(fn.angle_probe(), 100) is None
    assert fn.sup_bound(fn.angle_probe()) == 0.5
    assert math.isclose(fn.sup_bound(fn.series([(0.5, fn.constant(-3)), (0.25, fn.vanishing(1))])), 1.75)
