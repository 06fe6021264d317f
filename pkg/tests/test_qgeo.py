import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgb import build_space
from qgb import qgeo as qg
from qgb.oracles import _valid_pairs, brute_force_fan

LINE = build_space({"kind": "line"})
GRID = build_space({"kind": "grid2d"})
TREE = build_space({"kind": "tree", "degree": 4})
PROD = build_space({"kind": "product", "factors": [{"kind": "line"}, {"kind": "line"}]})
TT = build_space({"kind": "product", "factors": [{"kind": "tree"}, {"kind": "tree"}]})


def test_validate_examples():
    assert qg.validate(LINE, (0, 1, 2, 3), 1, 0) is None
    v = qg.validate(LINE, (0, 1, 0), 1, 0)
    assert (v.i, v.j, v.side) == (1, 3, "lower")


def _segment(a, b):
    """Lattice geodesic from a to b alternating x and y steps."""
    pts = [a]
    x, y = a
    while (x, y) != b:
        if x != b[0] and (abs(b[0] - x) >= abs(b[1] - y) or y == b[1]):
            x += 1 if b[0] > x else -1
        else:
            y += 1 if b[1] > y else -1
        pts.append((x, y))
    return pts


def test_spiral_with_geometric_radii_validates():
    corners = [(0, 0)] + [[(r, 0), (0, r), (-r, 0), (0, -r)][j % 4] for j, r in enumerate(2 ** j for j in range(9))]
    path = [(0, 0)]
    for a, b in zip(corners, corners[1:]):
        path += _segment(a, b)[1:]
    assert len(path) > 500
    assert qg.validate(GRID, path, 32, 32) is None
    assert qg.validate(GRID, path, 1, 0) is not None


def test_fan_examples():
    assert [g.points for g in qg.enumerate_fan(LINE, 0, 1, 0, 4).sequences] == [(0, -1, -2, -3), (0, 1, 2, 3)]
    assert len(qg.enumerate_fan(GRID, (0, 0), 1, 0, 3).sequences) == 12
    assert len(qg.enumerate_fan(TREE, (), 1, 0, 3).sequences) == 12


def test_fan_budget_truncates():
    res = qg.enumerate_fan(GRID, (0, 0), 2, 2, 4, budget=50)
    assert res.truncated


@pytest.mark.parametrize("space,x0", [(LINE, 0), (GRID, (0, 0)), (TREE, ())])
@pytest.mark.parametrize("q,Q,n", [(1, 0, 4), (1, 1, 3), (2, 2, 3)])
def test_fan_matches_brute_force(space, x0, q, Q, n):
    fan = qg.enumerate_fan(space, x0, q, Q, n)
    assert [g.points for g in fan.sequences] == brute_force_fan(space, x0, q, Q, n)
    assert qg.count_fan(space, x0, q, Q, n) == len(fan.sequences)


def test_threads():
    level = qg.enumerate_fan(LINE, 0, 1, 0, 4).sequences
    right = qg.Ray(LINE, "axis+x")
    assert [g.points for g in qg.thread(level, right, 2)] == [(0, 1, 2, 3)]
    level = qg.enumerate_fan(GRID, (0, 0), 1, 0, 3).sequences
    assert len(qg.thread(level, qg.Ray(GRID, "axis+x"), 1)) == 12
    t2 = qg.thread(level, qg.Ray(GRID, "axis+x"), 2)
    assert len(t2) == 3 and all(g.points[:2] == ((0, 0), (1, 0)) for g in t2)


def test_restrict():
    g = qg.Ray(LINE, "axis+x").materialize(5)
    assert qg.restrict(g, 3).points == (0, 1, 2)
    assert qg.restrict(g, 5) == g
    with pytest.raises(ValueError):
        qg.restrict(g, 6)


def test_cone_of_line_geodesic():
    c = qg.cone(LINE, qg.Ray(LINE, "axis+x"), 1, 0, 3, 10)
    assert c.exhausted
    assert c.members == {(i - 1, i) for i in range(3, 11)}


def test_cone_witnesses_are_valid_extensions():
    g = qg.Ray(GRID, "axis+x")
    c = qg.cone(GRID, g, 1, 1, 2, 5)
    assert c.exhausted
    for (p, i), path in c.witnesses.items():
        assert len(path) == i and path[-1] == p
        assert path[:2] == qg.prefix(g, 2)
        assert qg.validate(GRID, path, 1, 1) is None


def test_reach_finds_a_validated_witness_on_the_grid():
    g = qg.Ray(GRID, "axis+x")
    r = qg.cone_contains(GRID, g, 2, 2, 4, (0, 10))
    assert r.status == "in"
    assert r.path[:4] == qg.prefix(g, 4) and r.path[-1] == (0, 10)
    assert qg.validate(GRID, r.path, 2, 2) is None


def test_reach_proves_absence_on_the_line():
    # a (1,0) extension of the right ray can never turn back
    r = qg.reach(LINE, qg.prefix(qg.Ray(LINE, "axis+x"), 3), 1, 0, [-1, -5], horizon=20)
    assert r.status == "out"


def test_gate_proof_on_the_tree():
    g = qg.Ray(TREE, "branch:0", 2, 2)
    assert qg.cone_avoids_region(TREE, g, 2, 2, 7, "branch:1", 200_000).status == "out"
    assert qg.cone_avoids_region(TREE, g, 2, 2, 6, "branch:1", 200_000).status == "in"


def test_limit_extraction_examples():
    fam = [qg.Ray(LINE, "axis+x").materialize(n) for n in range(5, 51)]
    lim = qg.extract_limit_ray(LINE, fam, 1, 2, 5)
    assert lim.ray.points == (0, 1, 2, 3, 4)
    fam = [qg.geodesic_to(GRID, (n, 1)) for n in range(5, 51)]
    lim = qg.extract_limit_ray(GRID, fam, 1, 2, 5)
    assert qg.validate(GRID, lim.ray.points, 1, 5) is None
    assert all(GRID.distance(p, (i, 0)) <= 2 for i, p in enumerate(lim.ray.points))
    with pytest.raises(qg.FamilyTooSmall):
        qg.extract_limit_ray(GRID, fam[:1], 1, 2, 10)


def test_product_concat_examples():
    f = qg.Ray(LINE, "axis+x").materialize(4)
    h = qg.product_concat(f, f)
    assert len(h) == 7 and (h.q, h.Q) == (2, 2)
    assert qg.validate(PROD, h.points, 2, 2) is None
    h1 = qg.product_concat(qg.QuasiGeodesic((0,), 1, 0), f)
    assert h1.points == tuple((0, y) for y in f.points)
    assert qg.validate(PROD, h1.points, 2, 2) is None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 8))
def test_product_concat_random_tree_pairs(seed, la, lb):
    rng = random.Random(seed)
    f = qg.random_quasi_geodesic(TREE, (), 1, 1, la, rng)
    g = qg.random_quasi_geodesic(TREE, (), 1, 1, lb, rng)
    assert qg.validate(TT, qg.product_concat(f, g).points, 2, 2) is None


def test_net_pushforward_examples():
    g = qg.Ray(GRID, "axis+x", 1, 1).materialize(20)
    push = qg.net_pushforward(GRID, g, 0.5)
    assert push.ray.points == g.points
    push = qg.net_pushforward(GRID, g, 2)
    assert qg.validate(GRID, push.ray.points, 5, 5) is None
    assert all(d < 2 for d in push.offsets)
    net = set(push.net)
    assert GRID.basepoint in net
    assert all(GRID.distance(a, b) >= 2 for a in net for b in net if a != b)


def test_hausdorff_examples():
    g = qg.Ray(GRID, "axis+x")
    shifted = qg.QuasiGeodesic(tuple((i, 1) for i in range(200)), 1, 0)
    assert qg.hausdorff_close(GRID, g, g, 0, 50)
    assert qg.hausdorff_close(GRID, g, shifted, 1, 100)
    assert not qg.hausdorff_close(GRID, g, qg.Ray(GRID, "axis+y"), 10, 100)


def test_bounded_approach_examples():
    g = qg.Ray(GRID, "axis+x")
    sched = [(m, m) for m in range(2, 30)]
    prefixes = [g.materialize(n) for n in range(1, 60)]
    assert qg.boundedly_approaches(GRID, prefixes, g, 1, sched).ok
    seq = [qg.geodesic_to(GRID, (n, 1)) for n in range(1, 60)]
    assert qg.boundedly_approaches(GRID, seq, g, 2, sched).ok
    ups = [qg.geodesic_to(GRID, (0, n)) for n in range(1, 60)]
    # d((0,1),(1,0)) = 2 already breaks C = 2 at m = 2; with C = 3 the first break is at m = 3
    rep = qg.boundedly_approaches(GRID, ups, g, 3, sched)
    assert not rep.ok and rep.failure["m"] == 3


def test_random_quasi_geodesics_are_valid():
    rng = random.Random(3)
    for space, x0 in ((GRID, (0, 0)), (TREE, ()), (LINE, 0)):
        for _ in range(20):
            g = qg.random_quasi_geodesic(space, x0, 2, 2, rng.randint(1, 15), rng)
            assert qg.validate(space, g.points, 2, 2) is None


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=1, max_size=7),
       st.sampled_from([(1, 0), (1, 1), (2, 2), (1.5, 0.5)]))
def test_validate_agrees_with_pairwise_oracle(seq, qQ):
    q, Q = qQ
    v = qg.validate(GRID, seq, q, Q)
    assert (v is None) == _valid_pairs(GRID, tuple(seq), q, Q)
    if v is None:
        # prefixes of valid sequences are valid
        assert all(qg.validate(GRID, seq[:n], q, Q) is None for n in range(1, len(seq)))
