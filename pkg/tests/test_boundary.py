import pytest

from qgb import build_space
from qgb import boundary as bd
from qgb import qgeo as qg
from qgb.space import SpaceError

LINE = build_space({"kind": "line"})
GRID = build_space({"kind": "grid2d"})
TREE = build_space({"kind": "tree", "degree": 4})
WEDGE = build_space({"kind": "wedge_flats"})


def _witnesses_ok(space, v, k):
    return all(qg.validate(space, w.path, k, k) is None
               for rep in (v.forward, v.backward) for ws in rep.per_m.values() for w in ws)


def test_inverse_system_levels_and_retractions():
    inv = bd.build_inverse_system(GRID, (0, 0), 1, 1, 3)
    assert [inv.size(n) for n in (1, 2, 3)] == [1, 13, 124]
    assert inv.check_retractions()
    g = inv.levels[2][5]
    assert inv.retract(g, 2).points == g.points[:2]
    padded = bd.build_inverse_system(GRID, (0, 0), 1, 1, 3, padded=True)
    assert [padded.size(n) for n in (1, 2, 3)] == [1, 14, 138]
    assert padded.check_retractions()
    short = padded.levels[2][0]
    assert padded.retract(short, 2) == short


def test_merge_with_itself():
    g = qg.Ray(GRID, "axis+x", 2, 2)
    v = bd.merge_test(GRID, g, g, 2, 4, 48)
    assert v.merged and _witnesses_ok(GRID, v, 2)


def test_grid_axes_merge_with_l_shaped_witnesses():
    g, h = qg.Ray(GRID, "axis+x", 2, 2), qg.Ray(GRID, "axis+y", 2, 2)
    v = bd.merge_test(GRID, g, h, 2, 4, 48, T=2)
    assert v.merged
    assert _witnesses_ok(GRID, v, 2)
    for m, ws in v.forward.per_m.items():
        assert len(ws) >= 2
        assert all(w.index >= max(m, 24) and w.path[-1] == (0, w.index - 1) for w in ws)


def test_tree_branches_at_small_and_large_scale():
    g, h = qg.Ray(TREE, "branch:0", 2, 2), qg.Ray(TREE, "branch:1", 2, 2)
    # below the provable scale the cones genuinely cross into the other branch
    v6 = bd.merge_test(TREE, g, h, 2, 6, 30)
    assert v6.merged and _witnesses_ok(TREE, v6, 2)
    v8 = bd.merge_test(TREE, g, h, 2, 8, 30)
    assert not v8.merged
    assert v8.disjoint_proof["m"] <= 8


def test_merge_rejects_invalid_rays():
    bent = qg.QuasiGeodesic(((0, 0), (1, 0), (0, 0)) + tuple((0, i) for i in range(1, 60)), 2, 2)
    with pytest.raises(SpaceError):
        bd.merge_test(GRID, bent, qg.Ray(GRID, "axis+x", 2, 2), 1, 2, 10)
    off = qg.QuasiGeodesic(tuple((i, 1) for i in range(60)), 2, 2)
    with pytest.raises(SpaceError):
        bd.merge_test(GRID, off, qg.Ray(GRID, "axis+x", 2, 2), 2, 2, 10)
    with pytest.raises(ValueError):
        bd.merge_test(GRID, qg.Ray(GRID, "axis+x"), qg.Ray(GRID, "axis+y"), 2, 10, 5)


def test_grid_partition_is_one_class():
    names = ["axis+x", "axis-x", "axis+y", "axis-y", "diag++", "diag--"]
    P = bd.boundary_partition(GRID, [qg.Ray(GRID, n, 2, 2) for n in names], 2, 4, 48)
    assert P.classes == [list(range(6))]
    assert P.labels == [0] * 6
    dot = P.to_dot()
    assert dot.startswith("graph merge {") and dot.count(" -- ") == 15
    js = P.to_json()
    assert js["verdicts"][0][0] == "self" and js["verdicts"][1][0] == "merged"


def test_partition_does_not_depend_on_workers():
    names = ["flat:3:+x", "flat:5:+x", "line+", "line-"]
    rays = [qg.Ray(WEDGE, n, 2, 2) for n in names]
    one = bd.boundary_partition(WEDGE, rays, 2, 12, 48, threads=1)
    four = bd.boundary_partition(WEDGE, rays, 2, 12, 48, threads=4)
    assert one.classes == four.classes == [[0], [1], [2], [3]]
    assert one.verdicts == four.verdicts


def test_hausdorff_merges():
    g = qg.Ray(GRID, "axis+x", 2, 2)
    shifted = qg.QuasiGeodesic(tuple((i, 1) for i in range(100)), 1, 0)
    assert bd.hausdorff_merge(GRID, g, shifted, 1, 50) == "merged"
    assert bd.hausdorff_merge(TREE, qg.Ray(TREE, "branch:0"), qg.Ray(TREE, "branch:1"), 5, 30) == "not_applicable"
    push = qg.net_pushforward(GRID, g.materialize(30), 2)
    assert bd.hausdorff_merge(GRID, g.materialize(30), push.ray, 2, 30) == "merged"


def test_documented_end_counts():
    line = bd.coarse_ends(LINE, [2, 4, 8], 64)
    assert line.counts == [2, 2, 2] and line.stabilized
    grid = bd.coarse_ends(GRID, [2, 4, 8], 64)
    assert grid.counts == [1, 1, 1] and grid.stabilized
    tree = bd.coarse_ends(TREE, [1, 2, 3], 10)
    assert tree.counts == [4, 12, 36] and not tree.stabilized


def test_rays_land_in_their_ends():
    radii, R = [2, 4, 8], 32
    ends = bd.coarse_ends(LINE, radii, R, keep_labels=True)
    right = bd.ray_to_end(LINE, qg.Ray(LINE, "axis+x"), radii, R, ends)
    left = bd.ray_to_end(LINE, qg.Ray(LINE, "axis-x"), radii, R, ends)
    assert len(set(right.values())) == 1 and set(right.values()).isdisjoint(left.values())
    tends = bd.coarse_ends(TREE, [1, 2], 6, keep_labels=True)
    seen = {bd.ray_to_end(TREE, qg.Ray(TREE, f"branch:{b}"), [1, 2], 6, tends)[1] for b in range(4)}
    assert len(seen) == 4
    gends = bd.coarse_ends(GRID, radii, R, keep_labels=True)
    assert {bd.ray_to_end(GRID, qg.Ray(GRID, n), radii, R, gends)[8] for n in ("axis+x", "diag--")} == {0}


def test_gromov_products():
    assert bd.gromov_product(LINE, 5, -3, 0) == 0
    assert bd.gromov_product(LINE, 5, 3, 0) == 3
    assert bd.gromov_product(TREE, (0, 1, 1, 0, 1), (0, 1, 1, 1), ()) == 3


def test_delta_estimates():
    assert bd.estimate_delta(TREE, radius=5).delta == 0
    assert bd.estimate_delta(LINE, radius=20).delta == 0
    assert bd.estimate_delta(GRID, radius=4).delta > 0


def test_quasi_isometry_pushforwards():
    g = qg.Ray(GRID, "axis+x").materialize(30)
    doubled = bd.qi_pushforward(GRID, {"kind": "scale", "factor": 2}, g, 1, 0)
    assert (doubled.q, doubled.Q) == (2, 0)
    assert qg.validate(GRID, doubled.sequence, 2, 0) is None
    swapped = bd.qi_pushforward(GRID, {"kind": "swap"}, g, 1, 0)
    assert (swapped.q, swapped.Q) == (1, 0)
    bumped = bd.qi_pushforward(GRID, {"kind": "perturb", "modulus": 2}, g, 1, 0)
    assert qg.validate(GRID, bumped.sequence, 1, 2) is None
    assert bumped.Q <= 2
