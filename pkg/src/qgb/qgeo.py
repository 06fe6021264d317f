"""Integral quasi-geodesics and the path searches built on them.

A sequence ``g(1), ..., g(n)`` is an integral ``(q, Q)``-quasi-geodesic
when ``|i-j|/q - Q <= d(g(i), g(j)) <= q|i-j| + Q`` for every pair of
indices.  Indexing is 1-based throughout, and fans are based at
``g(1) = x0``.

All searches extend a partial sequence only by points of
``ball(last, q + Q)`` (forced by the bound for adjacent indices) and only
check the pairs involving the new index.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .space import Point, Space, SpaceError


class BudgetExhausted(RuntimeError):
    """Raised by strict callers when a search stops before completing."""


@dataclass(frozen=True)
class QuasiGeodesic:
    """A finite sequence of points with nominal constants ``(q, Q)``."""

    points: tuple
    q: float = 1.0
    Q: float = 0.0
    tag: str | None = None

    def __len__(self) -> int:
        return len(self.points)

    def at(self, i: int) -> Point:
        if not 1 <= i <= len(self.points):
            raise IndexError(f"index {i} outside [1, {len(self.points)}]")
        return self.points[i - 1]

    @property
    def k(self) -> float:
        return max(self.q, self.Q)


@dataclass(frozen=True)
class Ray:
    """A named generator-backed ray of a space (``g(1)`` is the basepoint)."""

    space: Space
    name: str
    q: float = 1.0
    Q: float = 0.0

    def at(self, i: int) -> Point:
        return self.space.ray_point(self.name, i)

    def materialize(self, n: int) -> QuasiGeodesic:
        return QuasiGeodesic(tuple(self.at(i) for i in range(1, n + 1)), self.q, self.Q, self.name)

    @property
    def tag(self) -> str:
        return self.name

    @property
    def k(self) -> float:
        return max(self.q, self.Q)


def prefix(g, n: int) -> tuple:
    """First ``n`` points of a ray or finite quasi-geodesic."""
    if isinstance(g, Ray):
        return tuple(g.at(i) for i in range(1, n + 1))
    if n > len(g.points):
        raise IndexError(f"sequence of length {len(g.points)} has no prefix of length {n}")
    return tuple(g.points[:n])


def _bounds(gap: int, q: float, Q: float) -> tuple[float, float]:
    return gap / q - Q, q * gap + Q


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    i: int
    j: int
    side: str  # "lower" or "upper"
    distance: float
    bound: float


def validate(space: Space, seq: Sequence[Point], q: float, Q: float) -> Violation | None:
    """Check the two-sided quasi-geodesic inequality on every index pair.

    Returns ``None`` when it holds, else the lexicographically first
    offending pair ``(i, j)`` and which bound failed.
    """
    if q < 1 or Q < 0:
        raise ValueError("need q >= 1 and Q >= 0")
    if not seq:
        raise ValueError("sequence must be nonempty")
    pts = [space.check(p) for p in seq]
    tol = space.tol
    batch = space.batch(pts)
    n = len(pts)
    for i in range(1, n):
        d = space.dists(pts[i - 1], batch)[i:]
        gaps = np.arange(1, n - i + 1)
        lo = gaps / q - Q
        hi = q * gaps + Q
        bad = (d < lo - tol) | (d > hi + tol)
        if bad.any():
            k = int(np.argmax(bad))
            side = "lower" if d[k] < lo[k] - tol else "upper"
            return Violation(i, i + 1 + k, side, float(d[k]), float(lo[k] if side == "lower" else hi[k]))
    return None


def is_valid(space: Space, seq: Sequence[Point], q: float, Q: float) -> bool:
    return validate(space, seq, q, Q) is None


def restrict(g: QuasiGeodesic, n: int) -> QuasiGeodesic:
    """Prefix of length ``n``; valid with the same constants."""
    if not 1 <= n <= len(g):
        raise ValueError(f"cannot restrict a length-{len(g)} sequence to {n}")
    return QuasiGeodesic(g.points[:n], g.q, g.Q, g.tag)


# ---------------------------------------------------------------------------
# the extension engine


class Extender:
    """Candidate generation and pair checks for one space and ``(q, Q)``."""

    def __init__(self, space: Space, q: float, Q: float):
        if q < 1 or Q < 0:
            raise ValueError("need q >= 1 and Q >= 0")
        self.space = space
        self.q = q
        self.Q = Q
        self.tol = space.tol
        self._steps: dict = {}

    def steps(self, p: Point):
        hit = self._steps.get(p)
        if hit is None:
            pts = self.space.ball(p, self.q + self.Q)
            hit = (pts, self.space.batch(pts))
            if len(self._steps) > 200_000:
                self._steps.clear()
            self._steps[p] = hit
        return hit

    def admissible(self, path: Sequence[Point], batch, size: int) -> np.ndarray:
        """Mask of batch points that may follow ``path`` at the next index."""
        j = len(path) + 1
        D = self.space.cross(path, batch)                      # rows: path indices 1..j-1
        gaps = (j - np.arange(1, j, dtype=float))[:, None]
        lo = gaps / self.q - self.Q
        hi = self.q * gaps + self.Q
        ok = (D >= lo - self.tol) & (D <= hi + self.tol)
        return ok.all(axis=0)

    def children(self, path: Sequence[Point]):
        pts, batch = self.steps(path[-1])
        mask = self.admissible(path, batch, len(pts))
        idx = np.flatnonzero(mask)
        return pts, batch, idx


# ---------------------------------------------------------------------------
# fans, threads, cones


@dataclass
class FanResult:
    sequences: list
    truncated: bool
    nodes: int


def enumerate_fan(space: Space, x0: Point, q: float, Q: float, n: int, budget: int = 1_000_000) -> FanResult:
    """All integral ``(q, Q)``-quasi-geodesics of length ``n`` with ``g(1) = x0``.

    ``budget`` caps the number of emitted sequences plus expanded nodes;
    when it is hit the result is flagged ``truncated``.
    """
    if n < 1:
        raise ValueError("length must be >= 1")
    if budget <= 0:
        raise ValueError("budget must be positive")
    space.check(x0)
    ext = Extender(space, q, Q)
    out: list = []
    used = 0
    truncated = False
    stack = [(x0,)]
    while stack:
        path = stack.pop()
        if len(path) == n:
            out.append(QuasiGeodesic(path, q, Q))
            continue
        used += 1
        if used + len(out) > budget:
            truncated = True
            break
        pts, _, idx = ext.children(path)
        for k in idx[::-1]:
            stack.append(path + (pts[k],))
    out.sort(key=lambda g: g.points)
    return FanResult(out, truncated, used)


def count_fan(space: Space, x0: Point, q: float, Q: float, n: int) -> int:
    """Number of fan members of length ``n`` (no materialisation)."""
    if n < 1:
        raise ValueError("length must be >= 1")
    if n == 1:
        return 1
    ext = Extender(space, q, Q)
    total = 0
    stack = [(x0,)]
    while stack:
        path = stack.pop()
        pts, _, idx = ext.children(path)
        if len(path) == n - 1:
            total += len(idx)
            continue
        for k in idx:
            stack.append(path + (pts[k],))
    return total


def thread(level: Iterable[QuasiGeodesic], g, m: int) -> list:
    """Members of a fan level agreeing with ``g`` on indices ``<= m``."""
    head = prefix(g, m)
    return [h for h in level if h.points[:m] == head]


@dataclass
class ConeResult:
    members: set          # {(point, index)}, index >= m
    horizon: int
    nodes: int
    exhausted: bool
    witnesses: dict = field(default_factory=dict)  # (point, index) -> path

    def points(self) -> set:
        return {p for p, _ in self.members}


def cone(space: Space, g, q: float, Q: float, m: int, horizon: int, budget: int = 200_000) -> ConeResult:
    """Enumerate the ``m``-cone of ``g`` up to index ``horizon``.

    Every valid extension of ``g|[1, m]`` is explored depth first; each
    ``(point, index >= m)`` met on the way is recorded together with the
    first path that witnessed it.  ``exhausted`` is true iff the search
    completed within ``budget`` expanded nodes.
    """
    if m < 1 or m > horizon:
        raise ValueError("need 1 <= m <= horizon")
    head = prefix(g, m)
    ext = Extender(space, q, Q)
    members = {(head[-1], m)}
    witnesses = {(head[-1], m): head}
    stack = [head]
    nodes = 0
    while stack:
        if nodes >= budget:
            return ConeResult(members, horizon, nodes, False, witnesses)
        path = stack.pop()
        nodes += 1
        pts, _, idx = ext.children(path)
        j = len(path) + 1
        for k in idx[::-1]:
            child = path + (pts[k],)
            key = (pts[k], j)
            if key not in members:
                members.add(key)
                witnesses[key] = child
            if j < horizon:
                stack.append(child)
    return ConeResult(members, horizon, nodes, True, witnesses)


@dataclass
class ReachResult:
    """Outcome of a targeted cone search.

    ``status`` is ``"in"`` (a witness path was found), ``"out"`` (the search
    was exhaustive and found nothing) or ``"unknown"`` (budget ran out).
    """

    status: str
    path: tuple | None
    target: Point | None
    nodes: int

    @property
    def found(self) -> bool:
        return self.status == "in"


def reach(space: Space, head: Sequence[Point], q: float, Q: float, targets: Sequence[Point],
          horizon: float = math.inf, budget: int = 20_000, exclude: Iterable = ()) -> ReachResult:
    """Search for a valid extension of ``head`` that visits one of ``targets``.

    The search is best first, keyed on the earliest index at which some
    target could still be reached.  A partial path is pruned
    as soon as no target has a nonempty feasible index window, so with a
    finite target set the search always terminates and an ``"out"`` answer
    is a proof that no extension (of any length) meets the targets.
    ``exclude`` lists targets already used as witnesses.
    """
    head = tuple(head)
    m = len(head)
    excluded = set(exclude)
    targets = [t for t in dict.fromkeys(targets) if t not in excluded]
    if not targets:
        return ReachResult("out", None, None, 0)
    for t in targets:
        if t == head[-1]:
            return ReachResult("in", head, t, 0)
    ext = Extender(space, q, Q)
    tol = space.tol
    tb = space.batch(targets)
    nt = len(targets)

    def windows(lo, hi, pt, j):
        d = space.dists(pt, tb)
        lo = np.maximum(lo, j + np.ceil((d - Q) / q - tol))
        hi = np.minimum(hi, j + np.floor(q * (d + Q) + tol))
        return lo, hi

    lo = np.full(nt, -np.inf)
    hi = np.full(nt, np.inf)
    for i, p in enumerate(head, 1):
        lo, hi = windows(lo, hi, p, i)
    lo = np.maximum(lo, m + 1)
    if not np.any((lo <= hi) & (lo <= horizon)):
        return ReachResult("out", None, None, 0)

    # best first: a node's key is the earliest index at which it could still
    # hit a target (a lower bound, as in A*), deeper paths first on ties
    tick = itertools.count()
    heap = [(float(lo.min()), -m, next(tick), head, lo, hi)]
    nodes = 0
    while heap:
        if nodes >= budget:
            return ReachResult("unknown", None, None, nodes)
        _, _, _, path, lo, hi = heapq.heappop(heap)
        nodes += 1
        j = len(path) + 1
        if j > horizon:
            continue
        pts, batch, idx = ext.children(path)
        if not len(idx):
            continue
        D = space.cross(targets, batch)[:, idx]  # targets x candidates
        hit = (D <= tol).any(axis=0)
        if hit.any():
            c = int(np.flatnonzero(hit)[0])
            t = int(np.flatnonzero(D[:, c] <= tol)[0])
            return ReachResult("in", path + (pts[idx[c]],), targets[t], nodes)
        clo = np.maximum(lo[:, None], j + np.ceil((D - Q) / q - tol))
        clo = np.maximum(clo, j + 1)
        chi = np.minimum(hi[:, None], j + np.floor(q * (D + Q) + tol))
        ok = (clo <= chi) & (clo <= horizon)
        best = np.where(ok, clo, np.inf).min(axis=0)
        for c in np.flatnonzero(ok.any(axis=0)):
            heapq.heappush(heap, (float(best[c]), -j, next(tick), path + (pts[idx[c]],), clo[:, c], chi[:, c]))
    return ReachResult("out", None, None, nodes)


def cone_contains(space: Space, g, q: float, Q: float, m: int, point: Point,
                  horizon: float = math.inf, budget: int = 20_000) -> ReachResult:
    """Tri-state membership of one point in the ``m``-cone of ``g``."""
    return reach(space, prefix(g, m), q, Q, [point], horizon, budget)


def cone_avoids_region(space: Space, g, q: float, Q: float, m: int, region: str,
                       budget: int = 200_000) -> ReachResult:
    """Decide whether the ``m``-cone of ``g`` meets a region, at every depth.

    Jumps have length at most ``q + Q``, so a path starting outside the
    region enters it through the region's finite gate.  Searching for the
    gate therefore answers the question for all indices at once: ``"out"``
    means the cone and the region are disjoint.
    """
    reg = space.region(region)
    head = prefix(g, m)
    if any(reg.contains(p) for p in head):
        return ReachResult("in", head, next(p for p in head if reg.contains(p)), 0)
    gate = reg.gate(q + Q)
    return reach(space, head, q, Q, gate, math.inf, budget)


# ---------------------------------------------------------------------------
# limits, products, nets


@dataclass
class LimitRay:
    ray: QuasiGeodesic
    survivors: list  # surviving family indices after each level


class FamilyTooSmall(ValueError):
    def __init__(self, depth: int):
        super().__init__(f"family only sustains depth {depth}")
        self.depth = depth


def extract_limit_ray(space: Space, family: Sequence[QuasiGeodesic], k: float, M: float, depth: int) -> LimitRay:
    """Diagonal extraction of a limit ray from a family of quasi-geodesics.

    At each level the surviving members are grouped around each of their
    current values; the largest group of values within ``M/2`` of a centre
    (diameter below ``M``) is kept, ties going to the canonically smallest
    centre, and that centre becomes the next point of the limit.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    x0 = space.basepoint
    alive = [j for j, g in enumerate(family) if len(g) >= 1 and g.points[0] == x0]
    zs: list = []
    survivors: list = []
    for n in range(1, depth + 1):
        alive = [j for j in alive if len(family[j]) >= n]
        if not alive:
            raise FamilyTooSmall(n - 1)
        values = sorted({family[j].points[n - 1] for j in alive})
        batch = space.batch([family[j].points[n - 1] for j in alive])
        best = None
        for v in values:
            d = space.dists(v, batch)
            group = [alive[i] for i in np.flatnonzero(d < M / 2 - space.tol)]
            if best is None or len(group) > len(best[1]):
                best = (v, group)
        zs.append(best[0])
        alive = best[1]
        survivors.append(list(alive))
    return LimitRay(QuasiGeodesic(tuple(zs), k, k + 2 * M), survivors)


def product_concat(f: QuasiGeodesic, g: QuasiGeodesic) -> QuasiGeodesic:
    """Walk ``f`` at height ``g(1)``, then walk ``g`` at ``f``'s endpoint.

    In the l1 product of two integrally ``(k, k)``-quasi-geodesic spaces
    the result is an integral ``(2k, 2k)``-quasi-geodesic.
    """
    y1 = g.points[0]
    x2 = f.points[-1]
    pts = tuple((x, y1) for x in f.points) + tuple((x2, y) for y in g.points[1:])
    k = max(f.k, g.k)
    return QuasiGeodesic(pts, 2 * k, 2 * k)


@dataclass
class NetPushforward:
    ray: QuasiGeodesic
    net: list
    offsets: list  # d(h(i), g(i))


def separated_net(space: Space, radius: float, M: float) -> list:
    """Greedy maximal ``M``-separated subset of ``ball(x0, radius)``.

    Points are scanned by norm, then canonically, so the basepoint is
    always included and the result is deterministic.
    """
    x0 = space.basepoint
    pts = space.ball(x0, radius)
    norms = space.dists(x0, space.batch(pts))
    order = sorted(range(len(pts)), key=lambda i: (norms[i], pts[i]))
    net: set = set()
    chosen = []
    for i in order:
        p = pts[i]
        near = space.ball(p, M)
        if not any(y in net and space._distance(p, y) < M - space.tol for y in near):
            net.add(p)
            chosen.append(p)
    return sorted(chosen)


def net_pushforward(space: Space, g: QuasiGeodesic, M: float) -> NetPushforward:
    """Move ``g`` onto a maximal ``M``-separated net containing ``x0``."""
    if M <= 0:
        raise ValueError("M must be positive")
    norms = space.dists(space.basepoint, space.batch(list(g.points)))
    net = separated_net(space, float(norms.max()) + M, M)
    members = set(net)
    pts, offsets = [], []
    for p in g.points:
        near = [y for y in space.ball(p, M) if y in members]
        best = min(near, key=lambda y: (space._distance(p, y), y))
        pts.append(best)
        offsets.append(space._distance(p, best))
    k = g.k
    return NetPushforward(QuasiGeodesic(tuple(pts), k + 2 * M, k + 2 * M, g.tag), net, offsets)


def hausdorff_close(space: Space, g, h, M: float, window: int) -> bool:
    """True iff the first ``window`` points of ``g`` and ``h`` are mutually within ``M``."""
    a, b = prefix(g, window), prefix(h, window)
    ba, bb = space.batch(a), space.batch(b)
    tol = space.tol
    return all(space.dists(p, bb).min() <= M + tol for p in a) and all(
        space.dists(p, ba).min() <= M + tol for p in b
    )


@dataclass
class ApproachReport:
    ok: bool
    failure: dict | None = None


def boundedly_approaches(space: Space, g_seq: Sequence[QuasiGeodesic], g, C: float,
                         schedule: Sequence[tuple[int, int]]) -> ApproachReport:
    """Finite check that ``g_n`` boundedly approaches ``g`` with constant ``C``.

    ``schedule`` lists pairs ``(m, N)`` (``N`` is a 1-based position in
    ``g_seq``): every ``g_n`` with ``n >= N`` must have length at least
    ``m`` and stay within ``C`` of ``g`` on indices ``<= m``.  Lengths must
    also grow along the sequence.
    """
    if not schedule:
        raise ValueError("schedule must be nonempty")
    lengths = [len(h) for h in g_seq]
    if len(lengths) < 2 or lengths[-1] <= lengths[0]:
        return ApproachReport(False, {"reason": "lengths do not grow", "lengths": lengths[:5]})
    for m, N in schedule:
        gm = prefix(g, m)
        for n in range(N, len(g_seq) + 1):
            h = g_seq[n - 1]
            if len(h) < m:
                return ApproachReport(False, {"reason": "too short", "m": m, "n": n})
            for i in range(1, m + 1):
                if space._distance(h.points[i - 1], gm[i - 1]) >= C - space.tol:
                    return ApproachReport(False, {"reason": "distance", "m": m, "n": n, "i": i})
    return ApproachReport(True)


def random_quasi_geodesic(space: Space, x0: Point, q: float, Q: float, n: int,
                          rng: random.Random, attempts: int = 200) -> QuasiGeodesic:
    """A random fan member of length ``n`` (uniform choice at each step, restarting on dead ends)."""
    ext = Extender(space, q, Q)
    for _ in range(attempts):
        path = (x0,)
        while len(path) < n:
            pts, _, idx = ext.children(path)
            if not len(idx):
                break
            path = path + (pts[int(rng.choice(list(idx)))],)
        if len(path) == n:
            return QuasiGeodesic(path, q, Q)
    raise RuntimeError("could not grow a random quasi-geodesic")


def geodesic_to(space: Space, target: Point, order: str = "xy") -> QuasiGeodesic:
    """l1 geodesic from the basepoint of a grid to ``target``.

    ``order`` is ``"xy"`` (x leg first), ``"yx"``, or ``"stair"``
    (alternate x and y steps while both remain).
    """
    if order not in ("xy", "yx", "stair"):
        raise ValueError(f"unknown order {order!r}")
    x, y = space.basepoint
    tx, ty = target
    sx, sy = (1 if tx > x else -1), (1 if ty > y else -1)
    nx, ny = abs(tx - x), abs(ty - y)
    if order == "xy":
        moves = "x" * nx + "y" * ny
    elif order == "yx":
        moves = "y" * ny + "x" * nx
    else:
        common = min(nx, ny)
        moves = "xy" * common + "x" * (nx - common) + "y" * (ny - common)
    pts = [(x, y)]
    for mv in moves:
        x, y = (x + sx, y) if mv == "x" else (x, y + sy)
        pts.append((x, y))
    return QuasiGeodesic(tuple(pts), 1, 0)
