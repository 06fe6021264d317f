"""Finite-scale approximations of the quasi-geodesic boundary.

The inverse system of fan levels, pairwise merge tests between rays, the
resulting partition into approximate boundary points, coarse ends, and
hyperbolicity probes via the Gromov product.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .qgeo import (
    QuasiGeodesic, Ray, count_fan, enumerate_fan, hausdorff_close, prefix, reach, restrict,
    validate, cone_avoids_region,
)
from .space import Point, Space, SpaceError


# ---------------------------------------------------------------------------
# inverse system


@dataclass
class InverseSystem:
    levels: list            # levels[n-1] = sorted list of QuasiGeodesic of length <= n (padded) or == n
    truncated: list         # per-level truncation flags
    padded: bool
    q: float
    Q: float

    def size(self, n: int) -> int:
        return len(self.levels[n - 1])

    def retract(self, g: QuasiGeodesic, n: int) -> QuasiGeodesic:
        """Image of a level-``n+1`` member in level ``n``."""
        return g if self.padded and len(g) <= n else restrict(g, n)

    def check_retractions(self) -> bool:
        for n in range(1, len(self.levels)):
            if self.truncated[n] or self.truncated[n - 1]:
                continue
            below = {g.points for g in self.levels[n - 1]}
            if any(self.retract(g, n).points not in below for g in self.levels[n]):
                return False
        return True


def build_inverse_system(space: Space, x0: Point, q: float, Q: float, n_max: int,
                         budget: int = 1_000_000, padded: bool = False) -> InverseSystem:
    """Fan levels ``S_1 .. S_{n_max}`` with restriction as retraction.

    In the padded variant level ``n`` also holds every shorter member, and
    retraction leaves sequences of length ``<= n`` alone.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    exact, flags = [], []
    for n in range(1, n_max + 1):
        res = enumerate_fan(space, x0, q, Q, n, budget)
        exact.append(res.sequences)
        flags.append(res.truncated)
    if padded:
        levels = []
        acc: list = []
        for lvl in exact:
            acc = acc + lvl
            levels.append(sorted(acc, key=lambda g: (len(g), g.points)))
        flags = [any(flags[: n + 1]) for n in range(n_max)]
    else:
        levels = exact
    return InverseSystem(levels, flags, padded, q, Q)


# ---------------------------------------------------------------------------
# merge test


@dataclass
class Witness:
    point: Point
    index: int       # index of the point along the target ray
    path: tuple      # valid extension of the source prefix ending at the point


@dataclass
class DirectionReport:
    source: str
    target: str
    per_m: dict          # m -> list[Witness]
    status: dict         # m -> "ok" | "short" | "disjoint" | "unknown" | "skipped"
    nodes: int = 0

    @property
    def ok(self) -> bool:
        return all(s == "ok" for s in self.status.values())


@dataclass
class MergeVerdict:
    status: str                 # "merged" or "not_merged_within_budget"
    forward: DirectionReport
    backward: DirectionReport
    params: dict
    disjoint_proof: dict | None = None   # set when some cone provably avoids the other ray

    @property
    def merged(self) -> bool:
        return self.status == "merged"


def _ray_points(g, n: int) -> tuple:
    return prefix(g, n)


def _direction(space: Space, gpts: tuple, hpts: tuple, k: float, m_star: int, N: int, T: int,
               depth: float, budget: int, names: tuple, disjoint_from: int | None = None) -> DirectionReport:
    per_m: dict = {}
    status: dict = {}
    nodes = 0

    def search(m: int):
        nonlocal nodes
        lo = max(m, math.ceil(depth * N))
        by_point: dict = {}
        for i in range(lo, N + 1):
            by_point.setdefault(hpts[i - 1], i)
        found: list = []
        used: set = set()
        last = "ok"
        while len(found) < T:
            r = reach(space, gpts[:m], k, k, list(by_point), horizon=N, budget=budget, exclude=used)
            nodes += r.nodes
            if not r.found:
                last = r.status
                break
            used.add(r.target)
            found.append(Witness(r.target, by_point[r.target], r.path))
        if len(found) >= T:
            return found, "ok"
        if last == "out":
            return found, "disjoint" if not found else "short"
        return found, "unknown"

    top = m_star
    if disjoint_from is not None:
        # the verdict is settled; smaller m are not searched
        for m in range(1, m_star + 1):
            per_m[m], status[m] = [], "disjoint" if m >= disjoint_from else "skipped"
        top = 0
    # cones are nested, so witnesses found at the largest m serve every
    # smaller m (their index already clears the larger threshold)
    best = None
    for m in range(top, 0, -1):
        if best is None:
            found, st = search(m)
            if st == "ok":
                best = found
            per_m[m], status[m] = found, st
        else:
            per_m[m], status[m] = best, "ok"
    return DirectionReport(names[0], names[1], dict(sorted(per_m.items())), dict(sorted(status.items())), nodes)


def _separation(space: Space, src, dst, k: float, m_star: int, N: int, depth: float, budget: int,
                minimal: bool = False) -> dict | None:
    """An ``m <= m_star`` whose cone of ``src`` provably avoids the region holding ``dst``'s tail.

    Only available for rays with a known region (tree branches, wedge
    flats and half-lines, bridgeless sqrt axes).  The gate search covers
    extensions of every length.  Cones shrink as ``m`` grows, so the proof
    is attempted at ``m_star``; with ``minimal`` it is then pushed down to
    the smallest provable ``m``.
    """
    if not isinstance(src, Ray) or not isinstance(dst, Ray):
        return None
    region = space.ray_region(dst.name, avoid=prefix(src, m_star))
    if region is None:
        return None
    reg = space.region(region)
    lo = max(1, math.ceil(depth * N))
    if not all(reg.contains(dst.at(i)) for i in range(lo, N + 1)):
        return None
    proof = None
    nodes = 0
    for m in range(m_star, 0, -1):
        r = cone_avoids_region(space, src, k, k, m, region, budget)
        nodes += r.nodes
        if r.status != "out":
            break
        proof = {"cone_of": src.name, "m": m, "region": region}
        if not minimal:
            break
    if proof is not None:
        proof["nodes"] = nodes
    return proof


def _name(g) -> str:
    return g.tag if getattr(g, "tag", None) else "seq"


def merge_test(space: Space, g, h, k: float, m_star: int, N: int, T: int = 2, depth: float = 0.5,
               budget: int = 20_000, prove: bool = True) -> MergeVerdict:
    """Decide at finite scale whether rays ``g`` and ``h`` merge.

    Merged requires, in both directions and for every ``m <= m_star``, at
    least ``T`` distinct points ``h(i)`` with ``max(m, depth*N) <= i <= N``
    inside the ``m``-cone of ``g``, each backed by a validated extension
    path of index at most ``N``.  Anything else is reported as not merged
    within budget, which says nothing about distinctness unless a
    disjointness proof is attached.
    """
    if not 1 <= m_star <= N:
        raise ValueError("need 1 <= m_star <= N")
    if T < 1 or not 0 <= depth <= 1:
        raise ValueError("need T >= 1 and 0 <= depth <= 1")
    gpts, hpts = _ray_points(g, N), _ray_points(h, N)
    for pts, nm in ((gpts, _name(g)), (hpts, _name(h))):
        v = validate(space, pts, k, k)
        if v is not None:
            raise SpaceError(f"ray {nm} is not a ({k},{k})-quasi-geodesic: {v}")
        if pts[0] != space.basepoint:
            raise SpaceError(f"ray {nm} does not start at the basepoint")
    params = {"k": k, "m_star": m_star, "N": N, "T": T, "depth": depth, "budget": budget}
    sep_f = _separation(space, g, h, k, m_star, N, depth, 10 * budget) if prove else None
    sep_b = _separation(space, h, g, k, m_star, N, depth, 10 * budget) if prove else None
    # a proof in either direction settles the verdict, so the other side is skipped
    settled = m_star + 1 if (sep_f or sep_b) else None
    fwd = _direction(space, gpts, hpts, k, m_star, N, T, depth, budget, (_name(g), _name(h)),
                     sep_f["m"] if sep_f else settled)
    bwd = _direction(space, hpts, gpts, k, m_star, N, T, depth, budget, (_name(h), _name(g)),
                     sep_b["m"] if sep_b else settled)
    for rep in (fwd, bwd):
        for ws in rep.per_m.values():
            for w in ws:
                assert validate(space, w.path, k, k) is None
    merged = fwd.ok and bwd.ok
    proof = sep_f or sep_b
    return MergeVerdict("merged" if merged else "not_merged_within_budget", fwd, bwd, params, proof)


# ---------------------------------------------------------------------------
# partitions


@dataclass
class BoundaryPartition:
    rays: list                 # ray names, ids are positions
    verdicts: dict             # (i, j) -> "merged" | "hausdorff" | "not_merged_within_budget"
    classes: list              # list of sorted id lists, ordered by smallest id
    params: dict
    details: dict = field(default_factory=dict)   # (i, j) -> MergeVerdict

    @property
    def labels(self) -> list:
        out = [0] * len(self.rays)
        for cls in self.classes:
            for i in cls:
                out[i] = cls[0]
        return out

    def to_dot(self) -> str:
        lines = ["graph merge {"]
        for i, name in enumerate(self.rays):
            lines.append(f'  {i} [label="{name}"];')
        for (i, j), v in sorted(self.verdicts.items()):
            if v != "not_merged_within_budget":
                lines.append(f'  {i} -- {j} [label="{v}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        n = len(self.rays)
        matrix = [["self" if i == j else self.verdicts[(min(i, j), max(i, j))] for j in range(n)] for i in range(n)]
        return {"params": self.params, "rays": self.rays, "verdicts": matrix, "classes": self.classes}


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _pair_job(args):
    space, g, h, params = args
    return merge_test(space, g, h, **params)


def _workers(threads: int | None) -> int:
    cap = os.environ.get("QGB_THREADS")
    n = threads if threads is not None else 1
    if cap:
        n = min(n, int(cap)) if threads is not None else int(cap)
    return max(1, n)


def boundary_partition(space: Space, rays: Sequence, k: float, m_star: int, N: int, T: int = 2,
                       depth: float = 0.5, budget: int = 20_000, hausdorff: float | None = None,
                       threads: int | None = None, prove: bool = True) -> BoundaryPartition:
    """Partition rays by the transitive closure of pairwise merge verdicts.

    With ``hausdorff`` set, pairs whose first ``N`` points are within that
    Hausdorff distance are merged without a cone search.  Pair tests may
    run in worker processes; the reduction is sequential and the class
    labels (smallest member id) do not depend on scheduling.
    """
    n = len(rays)
    params = {"k": k, "m_star": m_star, "N": N, "T": T, "depth": depth, "budget": budget, "prove": prove}
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    verdicts: dict = {}
    details: dict = {}
    todo = []
    for i, j in pairs:
        if hausdorff is not None and hausdorff_close(space, rays[i], rays[j], hausdorff, N):
            verdicts[(i, j)] = "hausdorff"
        else:
            todo.append((i, j))
    jobs = [(space, rays[i], rays[j], params) for i, j in todo]
    workers = _workers(threads)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_pair_job, jobs))
    else:
        results = [_pair_job(job) for job in jobs]
    for (i, j), v in zip(todo, results):
        verdicts[(i, j)] = v.status
        details[(i, j)] = v
    uf = _UnionFind(n)
    for (i, j), v in sorted(verdicts.items()):
        if v != "not_merged_within_budget":
            uf.union(i, j)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    classes = sorted(groups.values(), key=lambda c: c[0])
    names = [_name(r) for r in rays]
    out_params = dict(params, hausdorff=hausdorff)
    return BoundaryPartition(names, verdicts, classes, out_params, details)


def hausdorff_merge(space: Space, g, h, M: float, window: int) -> str:
    """``"merged"`` when the two windows are within Hausdorff distance ``M``, else ``"not_applicable"``."""
    return "merged" if hausdorff_close(space, g, h, M, window) else "not_applicable"


# ---------------------------------------------------------------------------
# coarse ends


@dataclass
class EndsReport:
    radii: list
    counts: list
    stabilized: bool
    R: float
    labels: dict            # r -> {point: component id (unbounded components only, ids by smallest point)}


def _complement_components(space: Space, pts: list, norms: np.ndarray, r: float, R: float):
    keep = [i for i in range(len(pts)) if norms[i] >= r - space.tol]
    sub = [pts[i] for i in keep]
    subn = norms[keep]
    index = {p: i for i, p in enumerate(sub)}
    rows, cols = [], []
    unit = space.step == 1.0
    for a, p in enumerate(sub):
        near = space.neighbors(p) if unit and _has_neighbors(space) else space.ball(p, space.step)
        for y in near:
            b = index.get(y)
            if b is not None and b > a:
                rows.append(a)
                cols.append(b)
    n = len(sub)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, lab = connected_components(graph, directed=False)
    outer = subn >= R - space.step - space.tol
    unbounded = sorted({int(c) for c in lab[outer]})
    # canonical ids: rank components by their smallest point
    smallest = {c: min(sub[i] for i in np.flatnonzero(lab == c)) for c in unbounded}
    order = {c: rank for rank, c in enumerate(sorted(unbounded, key=smallest.get))}
    labels = {sub[i]: order[int(lab[i])] for i in range(n) if int(lab[i]) in order}
    return len(unbounded), labels


def _has_neighbors(space: Space) -> bool:
    try:
        space.neighbors(space.basepoint)
        return True
    except NotImplementedError:
        return False


def coarse_ends(space: Space, radii: Sequence[float], R: float, keep_labels: bool = False) -> EndsReport:
    """Count components of ``ball(x0, R) minus ball(x0, r)`` that reach the outer sphere.

    Adjacency is distance at most the space's edge step, and a component
    counts as unbounded when it contains a point of norm at least
    ``R - step``.  ``stabilized`` says whether the counts agree over the
    last half of the schedule.
    """
    if not radii:
        raise ValueError("radius schedule must be nonempty")
    radii = sorted(radii)
    if radii[-1] >= R:
        raise ValueError("every radius must be below R")
    x0 = space.basepoint
    pts = space.ball(x0, R)
    norms = space.dists(x0, space.batch(pts))
    counts, labels = [], {}
    for r in radii:
        c, lab = _complement_components(space, pts, norms, r, R)
        counts.append(c)
        if keep_labels:
            labels[r] = lab
    tail = counts[len(counts) // 2:]
    return EndsReport(list(radii), counts, len(set(tail)) == 1 and len(counts) > 1, R, labels)


def ray_to_end(space: Space, g, radii: Sequence[float], R: float, ends: EndsReport | None = None) -> dict:
    """End component (per radius) that contains the part of ``g`` near the outer sphere."""
    ends = ends if ends is not None and ends.labels else coarse_ends(space, radii, R, keep_labels=True)
    out = {}
    for r in ends.radii:
        lab = ends.labels[r]
        i, hit = 1, None
        while True:
            try:
                p = g.at(i) if isinstance(g, Ray) else g.points[i - 1]
            except IndexError:
                break
            if space.norm(p) > R:
                break
            if space.norm(p) >= R - space.step - space.tol and p in lab:
                hit = lab[p]
            i += 1
            if i > 100 * (R + 2):
                break
        if hit is None:
            raise ValueError(f"ray does not reach the outer sphere of radius {R}")
        out[r] = hit
    return out


# ---------------------------------------------------------------------------
# hyperbolicity


def gromov_product(space: Space, x: Point, y: Point, a: Point) -> float:
    return 0.5 * (space.distance(x, a) + space.distance(y, a) - space.distance(x, y))


@dataclass
class DeltaEstimate:
    delta: float
    sample: str
    worst: tuple | None


def estimate_delta(space: Space, radius: float | None = None, points: Sequence[Point] | None = None,
                   bases: Sequence[Point] | None = None, samples: int | None = None,
                   seed: int = 0) -> DeltaEstimate:
    """Four times the worst violation of the four-point inequality, floored at 0.

    Exhaustive over ``points`` (default ``ball(x0, radius)``) unless
    ``samples`` asks for random quadruples.  For exhaustive runs the base
    points may be reduced to orbit representatives when the space knows
    its symmetries; this does not change the maximum.
    """
    if points is None:
        if radius is None:
            raise ValueError("give a radius or a point sample")
        points = space.ball(space.basepoint, radius)
    points = list(points)
    if not points:
        raise ValueError("sample must be nonempty")
    batch = space.batch(points)
    D = np.vstack([space.dists(p, batch) for p in points])
    n = len(points)
    if samples is not None:
        rng = np.random.default_rng(seed)
        quads = rng.integers(0, n, size=(samples, 4))
        x, y, z, a = quads.T
        gp = lambda u, v: 0.5 * (D[u, a] + D[v, a] - D[u, v])
        viol = np.minimum(gp(x, z), gp(z, y)) - gp(x, y)
        k = int(np.argmax(viol))
        worst = tuple(points[t] for t in quads[k])
        return DeltaEstimate(max(0.0, 4 * float(viol[k])), f"{samples} random quadruples of {n} points", worst)
    if bases is None:
        reps = space.orbit_representatives(points) if radius is not None else None
        bases = reps if reps is not None else points
    pos = {p: i for i, p in enumerate(points)}
    best, worst = 0.0, None
    for a in bases:
        ia = pos[a]
        G = 0.5 * (D[:, ia][:, None] + D[ia, :][None, :] - D)     # G[x, y] = <x,y>_a
        # max over z of min(G[x,z], G[z,y]) is a max-min matrix product
        M = np.zeros_like(G)
        for z in range(n):
            np.maximum(M, np.minimum(G[:, z][:, None], G[z, :][None, :]), out=M)
        V = M - G
        k = int(np.argmax(V))
        if V.flat[k] > best:
            best = float(V.flat[k])
            worst = (points[k // n], points[k % n], a)
    return DeltaEstimate(4 * best, f"exhaustive over {n} points, {len(bases)} base points", worst)


# ---------------------------------------------------------------------------
# quasi-isometric images


@dataclass
class Pushforward:
    sequence: tuple
    q: float
    Q: float


def _apply_map(spec: dict, p: Point) -> Point:
    kind = spec.get("kind")
    if kind == "scale":
        lam = spec["factor"]
        if not isinstance(lam, int) or lam < 1:
            raise ValueError("scale factor must be a positive integer")
        return tuple(lam * c for c in p) if isinstance(p, tuple) else lam * p
    if kind == "swap":
        return (p[1], p[0])
    if kind == "perturb":
        mod = spec.get("modulus", 2)
        return (p[0], p[1] + p[0] % mod)
    raise ValueError(f"unknown map kind {kind!r}")


def map_lipschitz(spec: dict) -> int:
    return spec["factor"] if spec.get("kind") == "scale" else 1


def qi_pushforward(space: Space, spec: dict, g: QuasiGeodesic, q: float, Q: float, c_max: int = 64) -> Pushforward:
    """Image of ``g`` under a simple quasi-isometry, with fitted constants.

    Constants are searched in the family ``(lam*q, lam*Q + c)`` for the
    smallest integer ``c >= 0`` that validates.
    """
    img = tuple(_apply_map(spec, p) for p in g.points)
    lam = map_lipschitz(spec)
    for c in range(c_max + 1):
        if validate(space, img, lam * q, lam * Q + c) is None:
            return Pushforward(img, lam * q, lam * Q + c)
    raise ValueError("no constants found within range")
