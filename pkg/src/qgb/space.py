"""Discrete, proper, pointed metric spaces.

Every space answers exact distance queries, enumerates finite balls in
canonical order and knows a handful of named geodesic rays.  Points are
plain hashable Python values (ints or tuples of ints) whose natural
ordering is the canonical order used for all deterministic output.

Spaces are immutable after construction, so one instance may be shared
freely between workers.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np

Point = Hashable

INTEGER_KINDS = {
    "line", "grid2d", "tree", "wedge_flats", "block_union", "explicit_graph", "product",
}


class SpaceError(ValueError):
    """Malformed space description or invalid point."""


@dataclass(frozen=True)
class Region:
    """A named subset of a space with a finite entry gate.

    ``gate(step)`` returns every point of the region lying within ``step``
    of the complement.  A path that starts outside the region and makes
    jumps of length at most ``step`` must hit the gate first.
    """

    name: str
    contains: Callable[[Point], bool]
    gate: Callable[[float], list]


class Space:
    """Base class; subclasses override the geometry hooks."""

    kind = "abstract"
    #: largest distance between adjacent points of the underlying graph
    step = 1.0

    def __init__(self, basepoint: Point, tol: float = 0.0):
        self.basepoint = basepoint
        self.tol = tol

    # -- geometry hooks -------------------------------------------------
    def contains(self, x: Point) -> bool:
        raise NotImplementedError

    def _distance(self, x: Point, y: Point) -> float:
        raise NotImplementedError

    def neighbors(self, x: Point) -> list:
        raise NotImplementedError(f"{self.kind} has no unit-edge graph structure")

    def _ball(self, x: Point, r: float) -> Iterable[Point]:
        return _graph_ball(self, x, r)

    # -- public API -----------------------------------------------------
    @property
    def exact(self) -> bool:
        return self.kind in INTEGER_KINDS

    def check(self, x: Point) -> Point:
        if not self.contains(x):
            raise SpaceError(f"point {x!r} is not in {self.kind}")
        return x

    def distance(self, x: Point, y: Point) -> float:
        self.check(x)
        self.check(y)
        return self._distance(x, y)

    def norm(self, x: Point) -> float:
        return self.distance(x, self.basepoint)

    def ball(self, x: Point, r: float) -> list:
        """All points within distance ``r`` of ``x``, canonically sorted."""
        if r < 0:
            raise SpaceError("radius must be nonnegative")
        self.check(x)
        return sorted(self._ball(x, r))

    def batch(self, points: Sequence[Point]) -> Any:
        """Pack points for repeated vectorised distance queries."""
        return list(points)

    def dists(self, x: Point, batch: Any) -> np.ndarray:
        """Distances from ``x`` to every point of a packed batch."""
        return np.array([self._distance(x, y) for y in batch], dtype=float)

    def cross(self, points: Sequence[Point], batch: Any) -> np.ndarray:
        """Distance matrix between ``points`` (rows) and a packed batch."""
        if not len(points):
            return np.zeros((0, 0))
        return np.vstack([self.dists(x, batch) for x in points])

    def le(self, a: float, b: float) -> bool:
        return a <= b + self.tol

    # -- rays and regions -----------------------------------------------
    def ray_names(self) -> list[str]:
        return []

    def ray_point(self, name: str, i: int) -> Point:
        raise SpaceError(f"{self.kind} has no ray named {name!r}")

    def ray_region(self, name: str, avoid: Sequence[Point] = ()) -> str | None:
        """Name of a region containing the tail of the ray, if one is known.

        ``avoid`` lists points the region should exclude where the space has
        a choice (for example the prefix of a competing ray)."""
        return None

    def region(self, name: str) -> Region:
        raise SpaceError(f"{self.kind} has no region named {name!r}")

    def orbit_representatives(self, points: Sequence[Point]) -> list | None:
        """Orbit representatives of ``points`` under isometries fixing the
        basepoint and preserving ``points``; ``None`` when unknown."""
        return None

    # -- serialisation --------------------------------------------------
    def encode(self, x: Point) -> Any:
        return _to_json(x)

    def decode(self, obj: Any) -> Point:
        return self.check(_from_json(obj))

    def spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {json.dumps(self.spec())}>"


def _to_json(x):
    if isinstance(x, tuple):
        return [_to_json(v) for v in x]
    return x


def _from_json(obj):
    if isinstance(obj, list):
        return tuple(_from_json(v) for v in obj)
    return obj


def _graph_ball(space: Space, x: Point, r: float) -> list:
    # unit-edge graphs only
    radius = math.floor(r + space.tol)
    seen = {x}
    frontier = [x]
    for _ in range(radius):
        nxt = []
        for p in frontier:
            for y in space.neighbors(p):
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return list(seen)


# ---------------------------------------------------------------------------
# integer line and lattice


class Line(Space):
    kind = "line"

    def __init__(self, basepoint: int = 0, tol: float = 0.0):
        super().__init__(basepoint, tol)

    def contains(self, x):
        return isinstance(x, (int, np.integer)) and not isinstance(x, bool)

    def _distance(self, x, y):
        return float(abs(x - y))

    def neighbors(self, x):
        return [x - 1, x + 1]

    def _ball(self, x, r):
        k = math.floor(r + self.tol)
        return range(x - k, x + k + 1)

    def batch(self, points):
        return np.asarray(points, dtype=float)

    def dists(self, x, batch):
        return np.abs(batch - x)

    def cross(self, points, batch):
        return np.abs(np.asarray(points, dtype=float)[:, None] - batch[None, :])

    def ray_names(self):
        return ["axis+x", "axis-x"]

    def ray_point(self, name, i):
        sign = {"axis+x": 1, "right": 1, "axis-x": -1, "left": -1}.get(name)
        if sign is None:
            return super().ray_point(name, i)
        return self.basepoint + sign * (i - 1)

    def ray_region(self, name, avoid=()):
        return {"axis+x": "right", "right": "right", "axis-x": "left", "left": "left"}.get(name)

    def region(self, name):
        b = self.basepoint
        if name == "right":
            return Region(name, lambda x: x > b, lambda s: list(range(b + 1, b + 1 + math.floor(s + self.tol))))
        if name == "left":
            return Region(name, lambda x: x < b, lambda s: list(range(b - math.floor(s + self.tol), b)))
        return super().region(name)

    def spec(self):
        return {"kind": "line", "basepoint": self.basepoint}


class Grid2d(Space):
    """Z^2 with the l1 metric."""

    kind = "grid2d"
    _RAYS = {
        "axis+x": (1, 0), "axis-x": (-1, 0), "axis+y": (0, 1), "axis-y": (0, -1),
        "diag++": (1, 1), "diag--": (-1, -1), "diag+-": (1, -1), "diag-+": (-1, 1),
    }

    def __init__(self, basepoint=(0, 0), tol: float = 0.0):
        super().__init__(tuple(basepoint), tol)

    def contains(self, x):
        return isinstance(x, tuple) and len(x) == 2 and all(isinstance(v, (int, np.integer)) for v in x)

    def _distance(self, x, y):
        return float(abs(x[0] - y[0]) + abs(x[1] - y[1]))

    def neighbors(self, x):
        a, b = x
        return [(a - 1, b), (a + 1, b), (a, b - 1), (a, b + 1)]

    def _ball(self, x, r):
        k = math.floor(r + self.tol)
        a, b = x
        return [(a + da, b + db) for da in range(-k, k + 1) for db in range(-(k - abs(da)), k - abs(da) + 1)]

    def batch(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 2)

    def dists(self, x, batch):
        return np.abs(batch[:, 0] - x[0]) + np.abs(batch[:, 1] - x[1])

    def cross(self, points, batch):
        a = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.abs(a[:, None, :] - batch[None, :, :]).sum(axis=2)

    def ray_names(self):
        return list(self._RAYS) + ["stair++"]

    def ray_point(self, name, i):
        x0, y0 = self.basepoint
        if name in self._RAYS:
            dx, dy = self._RAYS[name]
            return (x0 + dx * (i - 1), y0 + dy * (i - 1))
        if name == "stair++":
            return (x0 + i // 2, y0 + (i - 1) // 2)
        return super().ray_point(name, i)

    def spec(self):
        return {"kind": "grid2d", "basepoint": list(self.basepoint)}


# ---------------------------------------------------------------------------
# regular tree


class Tree(Space):
    """The ``degree``-regular tree.

    A vertex is the tuple of child choices on the way down from the root:
    the root has ``degree`` children labelled ``0..degree-1``, every other
    vertex has ``degree-1`` children labelled ``0..degree-2``.
    """

    kind = "tree"

    def __init__(self, degree: int = 4, basepoint=(), tol: float = 0.0):
        if not isinstance(degree, int) or degree < 3:
            raise SpaceError("tree degree must be an integer >= 3")
        self.degree = degree
        super().__init__(tuple(basepoint), tol)

    def contains(self, x):
        if not isinstance(x, tuple):
            return False
        if not x:
            return True
        return 0 <= x[0] < self.degree and all(0 <= c < self.degree - 1 for c in x[1:])

    def _distance(self, x, y):
        n = 0
        for a, b in zip(x, y):
            if a != b:
                break
            n += 1
        return float(len(x) + len(y) - 2 * n)

    def neighbors(self, x):
        width = self.degree if not x else self.degree - 1
        out = [x + (c,) for c in range(width)]
        if x:
            out.append(x[:-1])
        return out

    def batch(self, points):
        return _pack_words(points)

    def dists(self, x, batch):
        depths, mat = batch
        return len(x) + depths - 2 * _lcp(mat, x)

    def cross(self, points, batch):
        da, A = _pack_words(points)
        db, B = batch
        return da[:, None] + db[None, :] - 2 * _lcp_matrix(A, B)

    def ray_names(self):
        return [f"branch:{b}" for b in range(self.degree)]

    def ray_point(self, name, i):
        if name.startswith("branch:"):
            b = int(name.split(":")[1])
            if not 0 <= b < self.degree:
                raise SpaceError(f"no branch {b}")
            return self.basepoint + ((b,) + (0,) * (i - 2) if i > 1 else ())
        return super().ray_point(name, i)

    def ray_region(self, name, avoid=()):
        if name.startswith("branch:") and self.basepoint == ():
            return name
        return None

    def region(self, name):
        if name.startswith("branch:") and self.basepoint == ():
            b = int(name.split(":")[1])

            def gate(step):
                k = math.floor(step + self.tol)
                return sorted(p for p in _graph_ball(self, (b,), k - 1) if p and p[0] == b) if k >= 1 else []

            return Region(name, lambda x: bool(x) and x[0] == b, gate)
        return super().region(name)

    def orbit_representatives(self, points):
        # rooted automorphisms act transitively on each sphere of a root ball
        if self.basepoint != ():
            return None
        reps = {}
        for p in sorted(points):
            reps.setdefault(len(p), p)
        return [reps[d] for d in sorted(reps)]

    def encode(self, x):
        return list(x)

    def decode(self, obj):
        if obj == "root":
            return ()
        return self.check(tuple(obj))

    def spec(self):
        return {"kind": "tree", "degree": self.degree, "basepoint": "root" if self.basepoint == () else list(self.basepoint)}


def _pack_words(words):
    depths = np.fromiter((len(w) for w in words), dtype=np.int64, count=len(words))
    width = int(depths.max()) if len(words) else 0
    mat = np.full((len(words), max(width, 1)), -1, dtype=np.int64)
    for row, w in enumerate(words):
        mat[row, : len(w)] = w
    return depths.astype(float), mat


def _lcp(mat: np.ndarray, word: tuple) -> np.ndarray:
    n = min(len(word), mat.shape[1])
    if n == 0:
        return np.zeros(mat.shape[0])
    eq = mat[:, :n] == np.asarray(word[:n])
    return np.cumprod(eq, axis=1).sum(axis=1).astype(float)


def _lcp_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    w = min(A.shape[1], B.shape[1])
    if w == 0:
        return np.zeros((A.shape[0], B.shape[0]))
    eq = (A[:, None, :w] == B[None, :, :w]) & (A[:, None, :w] >= 0)
    # position of the first mismatch, or w when there is none
    return np.where(eq.all(axis=2), w, eq.argmin(axis=2)).astype(float)


# ---------------------------------------------------------------------------
# l1 product


class Product(Space):
    """``X x Y`` with the l1 metric; points are pairs ``(x, y)``."""

    kind = "product"

    def __init__(self, left: Space, right: Space, tol: float = 0.0):
        self.left = left
        self.right = right
        self.step = max(left.step, right.step)
        super().__init__((left.basepoint, right.basepoint), max(tol, left.tol, right.tol))

    @property
    def exact(self):
        return self.left.exact and self.right.exact

    def contains(self, x):
        return isinstance(x, tuple) and len(x) == 2 and self.left.contains(x[0]) and self.right.contains(x[1])

    def _distance(self, x, y):
        return self.left._distance(x[0], y[0]) + self.right._distance(x[1], y[1])

    def neighbors(self, x):
        return [(a, x[1]) for a in self.left.neighbors(x[0])] + [(x[0], b) for b in self.right.neighbors(x[1])]

    def _ball(self, x, r):
        out = []
        for a in self.left._ball(x[0], r):
            rest = r - self.left._distance(x[0], a)
            out.extend((a, b) for b in self.right._ball(x[1], rest))
        return out

    def batch(self, points):
        return (self.left.batch([p[0] for p in points]), self.right.batch([p[1] for p in points]))

    def dists(self, x, batch):
        return self.left.dists(x[0], batch[0]) + self.right.dists(x[1], batch[1])

    def cross(self, points, batch):
        return (self.left.cross([p[0] for p in points], batch[0])
                + self.right.cross([p[1] for p in points], batch[1]))

    def ray_names(self):
        return [f"x:{n}" for n in self.left.ray_names()] + [f"y:{n}" for n in self.right.ray_names()]

    def ray_point(self, name, i):
        side, _, inner = name.partition(":")
        if side == "x":
            return (self.left.ray_point(inner, i), self.right.basepoint)
        if side == "y":
            return (self.left.basepoint, self.right.ray_point(inner, i))
        return super().ray_point(name, i)

    def encode(self, x):
        return [self.left.encode(x[0]), self.right.encode(x[1])]

    def decode(self, obj):
        return (self.left.decode(obj[0]), self.right.decode(obj[1]))

    def spec(self):
        return {"kind": "product", "factors": [self.left.spec(), self.right.spec()]}


# ---------------------------------------------------------------------------
# line with a plane glued at every integer


class WedgeFlats(Space):
    """The integer line with a copy of Z^2 attached at each integer.

    A point is ``(n, a, b)``: coordinates ``(a, b)`` in the flat glued at
    line point ``n``; ``(n, 0, 0)`` is the line point itself.
    """

    kind = "wedge_flats"
    _DIRS = {"+x": (1, 0), "-x": (-1, 0), "+y": (0, 1), "-y": (0, -1)}

    def __init__(self, basepoint=(0, 0, 0), tol: float = 0.0):
        super().__init__(tuple(basepoint), tol)

    def contains(self, x):
        return isinstance(x, tuple) and len(x) == 3 and all(isinstance(v, (int, np.integer)) for v in x)

    def _distance(self, x, y):
        if x[0] == y[0]:
            return float(abs(x[1] - y[1]) + abs(x[2] - y[2]))
        return float(abs(x[1]) + abs(x[2]) + abs(x[0] - y[0]) + abs(y[1]) + abs(y[2]))

    def neighbors(self, x):
        n, a, b = x
        out = [(n, a - 1, b), (n, a + 1, b), (n, a, b - 1), (n, a, b + 1)]
        if a == 0 and b == 0:
            out += [(n - 1, 0, 0), (n + 1, 0, 0)]
        return out

    def _ball(self, x, r):
        k = math.floor(r + self.tol)
        n, a, b = x
        out = [(n, a + da, b + db) for da in range(-k, k + 1) for db in range(-(k - abs(da)), k - abs(da) + 1)]
        rest = k - abs(a) - abs(b)
        for m in range(n - rest, n + rest + 1):
            if m == n:
                continue
            j = rest - abs(m - n)
            out.extend((m, da, db) for da in range(-j, j + 1) for db in range(-(j - abs(da)), j - abs(da) + 1))
        return out

    def batch(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 3)

    def dists(self, x, batch):
        same = np.abs(batch[:, 1] - x[1]) + np.abs(batch[:, 2] - x[2])
        other = abs(x[1]) + abs(x[2]) + np.abs(batch[:, 0] - x[0]) + np.abs(batch[:, 1]) + np.abs(batch[:, 2])
        return np.where(batch[:, 0] == x[0], same, other)

    def cross(self, points, batch):
        a = np.asarray(points, dtype=float).reshape(-1, 3)[:, None, :]
        b = batch[None, :, :]
        same = np.abs(b[..., 1] - a[..., 1]) + np.abs(b[..., 2] - a[..., 2])
        other = (np.abs(a[..., 1]) + np.abs(a[..., 2]) + np.abs(b[..., 0] - a[..., 0])
                 + np.abs(b[..., 1]) + np.abs(b[..., 2]))
        return np.where(b[..., 0] == a[..., 0], same, other)

    def ray_names(self):
        return ["line+", "line-", "flat:N:+x", "flat:N:+y", "flat:N:-x", "flat:N:-y", "flat:N:diag"]

    def ray_point(self, name, i):
        n0 = self.basepoint[0]
        if self.basepoint[1:] != (0, 0):
            raise SpaceError("wedge_flats rays need a basepoint on the line")
        if name in ("line+", "line-"):
            return (n0 + (i - 1) * (1 if name == "line+" else -1), 0, 0)
        if name.startswith("flat:"):
            _, n, d = name.split(":")
            n = int(n)
            travel = abs(n - n0)
            if i <= travel + 1:
                return (n0 + (i - 1) * (1 if n >= n0 else -1), 0, 0)
            t = i - 1 - travel
            if d == "diag":
                return (n, (t + 1) // 2, t // 2)
            if d not in self._DIRS:
                raise SpaceError(f"unknown flat direction {d!r}")
            dx, dy = self._DIRS[d]
            return (n, dx * t, dy * t)
        return super().ray_point(name, i)

    def ray_region(self, name, avoid=()):
        if name.startswith("flat:"):
            return "flat:" + name.split(":")[1]
        if name == "line+":
            return f"beyond:+{max([self.basepoint[0]] + [p[0] for p in avoid])}"
        if name == "line-":
            return f"beyond:-{min([self.basepoint[0]] + [p[0] for p in avoid])}"
        return None

    def region(self, name):
        if name.startswith("beyond:"):
            # everything glued to the line strictly past c, in one direction
            sign = 1 if name[7] == "+" else -1
            c = int(name[8:])

            def inside(x):
                return sign * (x[0] - c) > 0

            def gate(step):
                k = math.floor(step + self.tol)
                return sorted(p for p in self._ball((c, 0, 0), k) if inside(p))

            return Region(name, inside, gate)
        if name.startswith("flat:"):
            n = int(name.split(":")[1])

            def gate(step):
                k = math.floor(step + self.tol)
                return sorted(p for p in self._ball((n, 0, 0), k) if p[0] == n and p[1:] != (0, 0))

            return Region(name, lambda x: x[0] == n and x[1:] != (0, 0), gate)
        return super().region(name)

    def spec(self):
        return {"kind": "wedge_flats", "basepoint": list(self.basepoint)}


# ---------------------------------------------------------------------------
# two rays whose mutual distance grows like a square root


class SqrtRays(Space):
    """Two integer rays ``(x, 0)`` and ``(0, y)`` joined at the origin.

    With ``rule="literal"`` the cross distance is ``a(max(x, y)) + |x - y|``
    with ``a = sqrt``, which is exactly the stated rule but fails the
    triangle inequality (e.g. ``(1,0), (0,1), (0,100)``).  ``rule="path"``
    uses the shortest-path closure of that rule, ``a(min(x, y)) + |x - y|``.

    With ``bridges=True`` a unit-edge path of length ``n`` joins ``(n^2, 0)``
    to ``(0, n^2)``; its interior point at ``j`` steps from ``(n^2, 0)`` is
    the triple ``(n, n, j)``.  Bridged spaces always use the path metric.
    """

    kind = "sqrt_rays"

    def __init__(self, bridges: bool = False, rule: str = "literal", tol: float = 1e-9):
        if rule not in ("literal", "path"):
            raise SpaceError("sqrt_rays rule must be 'literal' or 'path'")
        self.bridges = bool(bridges)
        self.rule = "path" if self.bridges else rule
        super().__init__((0, 0), tol)

    def contains(self, x):
        if not isinstance(x, tuple) or not all(isinstance(v, (int, np.integer)) for v in x):
            return False
        if len(x) == 2:
            return x[0] >= 0 and x[1] >= 0 and (x[0] == 0 or x[1] == 0)
        return self.bridges and len(x) == 3 and x[0] == x[1] and x[0] >= 2 and 1 <= x[2] < x[0]

    def _axis(self, x, y):
        if x[0] == 0 and y[0] == 0:
            return float(abs(x[1] - y[1]))
        if x[1] == 0 and y[1] == 0:
            return float(abs(x[0] - y[0]))
        u, v = x[0] + x[1], y[0] + y[1]
        pick = max if self.rule == "literal" else min
        return math.sqrt(pick(u, v)) + abs(u - v)

    def _ends(self, x):
        n, _, j = x
        return (((n * n, 0), j), ((0, n * n), n - j))

    def _distance(self, x, y):
        if len(x) == 2 and len(y) == 2:
            return self._axis(x, y)
        if len(x) == 3 and len(y) == 3 and x[0] == y[0]:
            return float(abs(x[2] - y[2]))
        xs = self._ends(x) if len(x) == 3 else ((x, 0),)
        ys = self._ends(y) if len(y) == 3 else ((y, 0),)
        return min(a + self._axis(p, q) + b for p, a in xs for q, b in ys)

    def _ball(self, x, r):
        c = x[0] + x[1] if len(x) == 2 else x[0] * x[0]
        reach = math.floor(r + self.tol) + (x[0] if len(x) == 3 else 0)
        lo, hi = max(0, c - reach - 1), c + reach + 1
        cand = {(t, 0) for t in range(lo, hi + 1)} | {(0, t) for t in range(lo, hi + 1)}
        cand |= {(t, 0) for t in range(0, min(hi, reach + 1) + 1)} | {(0, t) for t in range(0, min(hi, reach + 1) + 1)}
        if self.bridges:
            n = 2
            while n * n <= hi + n:
                cand |= {(n, n, j) for j in range(1, n)}
                n += 1
        return [p for p in cand if self._distance(x, p) <= r + self.tol]

    def neighbors(self, x):
        if len(x) == 3:
            n, _, j = x
            prev = (n * n, 0) if j == 1 else (n, n, j - 1)
            nxt = (0, n * n) if j == n - 1 else (n, n, j + 1)
            return [prev, nxt]
        out = []
        if x[0] > 0 or x == (0, 0):
            out += [(x[0] + 1, 0)] + ([(x[0] - 1, 0)] if x[0] > 0 else [])
        if x[1] > 0 or x == (0, 0):
            out += [(0, x[1] + 1)] + ([(0, x[1] - 1)] if x[1] > 0 else [])
        if self.bridges:
            t = x[0] + x[1]
            n = math.isqrt(t)
            if n >= 2 and n * n == t:
                out.append((n, n, 1) if x[1] == 0 else (n, n, n - 1))
        return out

    def ray_names(self):
        return ["horizontal", "vertical"]

    def ray_point(self, name, i):
        if name in ("horizontal", "axis+x"):
            return (i - 1, 0)
        if name in ("vertical", "axis+y"):
            return (0, i - 1)
        return super().ray_point(name, i)

    def ray_region(self, name, avoid=()):
        if self.bridges:
            return None
        return {"axis+x": "horizontal", "axis+y": "vertical"}.get(name, name if name in ("horizontal", "vertical") else None)

    def region(self, name):
        if self.bridges or name not in ("horizontal", "vertical"):
            return super().region(name)
        axis = 0 if name == "horizontal" else 1

        def inside(x):
            return len(x) == 2 and x[axis] > 0

        def gate(step):
            out = []
            t = 1
            # d(p, complement) >= sqrt(t) for p at coordinate t
            while math.sqrt(t) <= step + self.tol:
                p = (t, 0) if axis == 0 else (0, t)
                if any(not inside(y) for y in self._ball(p, step)):
                    out.append(p)
                t += 1
            return out

        return Region(name, inside, gate)

    def spec(self):
        return {"kind": "sqrt_rays", "bridges": self.bridges, "rule": self.rule}


# ---------------------------------------------------------------------------
# two tree-times-line blocks glued along a plane


class BlockUnion(Space):
    """Toy two-block space: ``B0 = T x R`` and ``B1 = R x T`` glued along a wall.

    ``T`` is the 3-regular tree seen from a bi-infinite geodesic: a tree
    vertex is ``(anchor, word)`` where ``anchor`` is the projection onto the
    geodesic and ``word`` the path away from it (first letter always 0,
    later letters 0 or 1).  A point is ``(block, s, t, word)``:

    * block 0: tree vertex ``(s, word)``, line coordinate ``t``;
    * block 1: line coordinate ``s``, tree vertex ``(t, word)``.

    Wall points (empty word) are always stored with block 0; the wall is
    the plane ``{(s, t)}`` shared by both blocks.
    """

    kind = "block_union"

    def __init__(self, basepoint=(0, 0, 0, ()), tol: float = 0.0):
        super().__init__(self._norm_point(tuple(basepoint)), tol)

    @staticmethod
    def _norm_point(x):
        if len(x) == 4 and not x[3]:
            return (0, x[1], x[2], ())
        return x

    def contains(self, x):
        if not (isinstance(x, tuple) and len(x) == 4 and isinstance(x[3], tuple)):
            return False
        blk, s, t, w = x
        if blk not in (0, 1) or not all(isinstance(v, (int, np.integer)) for v in (s, t)):
            return False
        if not w:
            return blk == 0
        return w[0] == 0 and all(c in (0, 1) for c in w)

    def _distance(self, x, y):
        bx, sx, tx, wx = x
        by, sy, ty, wy = y
        d = len(wx) + len(wy) + abs(sx - sy) + abs(tx - ty)
        if bx == by and wx and wy and (sx == sy if bx == 0 else tx == ty):
            n = 0
            for a, b in zip(wx, wy):
                if a != b:
                    break
                n += 1
            d -= 2 * n
        return float(d)

    def neighbors(self, x):
        blk, s, t, w = x
        out = []
        if not w:
            out += [(0, s - 1, t, ()), (0, s + 1, t, ()), (0, s, t - 1, ()), (0, s, t + 1, ())]
            out += [(0, s, t, (0,)), (1, s, t, (0,))]
            return out
        parent = self._norm_point((blk, s, t, w[:-1]))
        out += [parent, (blk, s, t, w + (0,)), (blk, s, t, w + (1,))]
        if blk == 0:
            out += [(0, s, t - 1, w), (0, s, t + 1, w)]
        else:
            out += [(1, s - 1, t, w), (1, s + 1, t, w)]
        return out

    def batch(self, points):
        arr = np.array([(p[0], p[1], p[2]) for p in points], dtype=float).reshape(-1, 3)
        depths, mat = _pack_words([p[3] for p in points])
        return arr, depths, mat

    def dists(self, x, batch):
        arr, depths, mat = batch
        blk, s, t, w = x
        d = len(w) + depths + np.abs(arr[:, 1] - s) + np.abs(arr[:, 2] - t)
        if w:
            anchor = arr[:, 1] == s if blk == 0 else arr[:, 2] == t
            same = (arr[:, 0] == blk) & anchor & (depths > 0)
            d = d - 2 * np.where(same, _lcp(mat, w), 0.0)
        return d

    def ray_names(self):
        return ["wall:+s", "wall:-s", "wall:+t", "wall:-t", "b0:tree", "b1:tree"]

    def ray_point(self, name, i):
        b, s, t, _ = self.basepoint
        if name.startswith("wall:"):
            sign = 1 if name[5] == "+" else -1
            if name[6] == "s":
                return (0, s + sign * (i - 1), t, ())
            return (0, s, t + sign * (i - 1), ())
        if name in ("b0:tree", "b1:tree"):
            if i == 1:
                return self.basepoint
            return (0 if name == "b0:tree" else 1, s, t, (0,) * (i - 1))
        return super().ray_point(name, i)

    def encode(self, x):
        return [x[0], x[1], x[2], list(x[3])]

    def decode(self, obj):
        return self.check(self._norm_point((obj[0], obj[1], obj[2], tuple(obj[3]))))

    def spec(self):
        return {"kind": "block_union", "basepoint": self.encode(self.basepoint)}


# ---------------------------------------------------------------------------
# finite weighted graph


class ExplicitGraph(Space):
    """A finite connected graph with positive edge weights."""

    kind = "explicit_graph"

    def __init__(self, vertices, edges, basepoint=None, tol: float = 0.0):
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components, shortest_path

        self.vertices = [_from_json(v) for v in vertices]
        if not self.vertices:
            raise SpaceError("explicit_graph needs at least one vertex")
        self._index = {v: i for i, v in enumerate(self.vertices)}
        if len(self._index) != len(self.vertices):
            raise SpaceError("duplicate vertices")
        rows, cols, weights = [], [], []
        self.edges = []
        for e in edges:
            u, v, w = _from_json(e[0]), _from_json(e[1]), float(e[2]) if len(e) > 2 else 1.0
            if u not in self._index or v not in self._index:
                raise SpaceError(f"edge {e!r} uses an unknown vertex")
            if w <= 0:
                raise SpaceError("edge weights must be positive")
            self.edges.append((u, v, w))
            rows.append(self._index[u])
            cols.append(self._index[v])
            weights.append(w)
        n = len(self.vertices)
        adj = coo_matrix((weights, (rows, cols)), shape=(n, n)).tocsr()
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise SpaceError("explicit_graph must be connected")
        self._dist = shortest_path(adj, directed=False)
        self.integer = all(float(w).is_integer() for _, _, w in self.edges)
        self.step = max((w for _, _, w in self.edges), default=1.0)
        base = self.vertices[0] if basepoint is None else _from_json(basepoint)
        super().__init__(base, tol if self.integer else max(tol, 1e-9))
        self.check(base)

    @property
    def exact(self):
        return self.integer

    def contains(self, x):
        try:
            return x in self._index
        except TypeError:
            return False

    def _distance(self, x, y):
        return float(self._dist[self._index[x], self._index[y]])

    def _ball(self, x, r):
        row = self._dist[self._index[x]]
        return [v for v, d in zip(self.vertices, row) if d <= r + self.tol]

    def neighbors(self, x):
        out = [v for u, v, _ in self.edges if u == x] + [u for u, v, _ in self.edges if v == x]
        return sorted(set(out))

    def batch(self, points):
        return np.array([self._index[p] for p in points], dtype=int)

    def dists(self, x, batch):
        return self._dist[self._index[x], batch]

    def cross(self, points, batch):
        rows = np.array([self._index[p] for p in points], dtype=int)
        return self._dist[np.ix_(rows, batch)]

    def spec(self):
        return {
            "kind": "explicit_graph",
            "vertices": [_to_json(v) for v in self.vertices],
            "edges": [[_to_json(u), _to_json(v), w] for u, v, w in self.edges],
            "basepoint": _to_json(self.basepoint),
        }


# ---------------------------------------------------------------------------
# construction from JSON specs


def build_space(spec: dict | str, tol: float | None = None) -> Space:
    """Build a space from its JSON description (dict or JSON text)."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpaceError("space spec must be an object with a 'kind'")
    kind = spec["kind"]
    extra = {} if tol is None else {"tol": tol}
    try:
        if kind == "line":
            return Line(int(spec.get("basepoint", 0)), **extra)
        if kind == "grid2d":
            return Grid2d(tuple(spec.get("basepoint", (0, 0))), **extra)
        if kind == "tree":
            base = spec.get("basepoint", "root")
            return Tree(spec.get("degree", 4), () if base == "root" else tuple(base), **extra)
        if kind == "product":
            factors = spec.get("factors")
            if not factors or len(factors) != 2:
                raise SpaceError("product needs exactly two factors")
            if spec.get("metric", "l1") != "l1":
                raise SpaceError("only the l1 product metric is supported")
            return Product(build_space(factors[0], tol), build_space(factors[1], tol), **extra)
        if kind == "wedge_flats":
            return WedgeFlats(tuple(spec.get("basepoint", (0, 0, 0))), **extra)
        if kind == "sqrt_rays":
            return SqrtRays(spec.get("bridges", False), spec.get("rule", "literal"), **({"tol": tol} if tol is not None else {}))
        if kind == "block_union":
            base = spec.get("basepoint", [0, 0, 0, []])
            return BlockUnion((base[0], base[1], base[2], tuple(base[3])), **extra)
        if kind == "explicit_graph":
            return ExplicitGraph(spec["vertices"], spec["edges"], spec.get("basepoint"), **extra)
    except (KeyError, TypeError, IndexError) as exc:
        raise SpaceError(f"malformed {kind} spec: {exc}") from exc
    raise SpaceError(f"unknown space kind {kind!r}")


def check_metric(space: Space, points: Sequence[Point]) -> dict | None:
    """Exhaustively check the metric axioms on a finite point set.

    Returns ``None`` when all axioms hold, otherwise a description of the
    first violation found.
    """
    pts = sorted(points)
    b = space.batch(pts)
    D = np.vstack([space.dists(p, b) for p in pts])
    tol = space.tol
    if np.any(D < -tol):
        i, j = np.argwhere(D < -tol)[0]
        return {"axiom": "nonnegative", "points": [pts[i], pts[j]]}
    if np.any(np.abs(np.diag(D)) > tol):
        i = int(np.argmax(np.abs(np.diag(D)) > tol))
        return {"axiom": "identity", "points": [pts[i]]}
    off = D + np.eye(len(pts))
    if np.any(off <= tol):
        i, j = np.argwhere(off <= tol)[0]
        return {"axiom": "separation", "points": [pts[i], pts[j]]}
    if np.any(np.abs(D - D.T) > tol):
        i, j = np.argwhere(np.abs(D - D.T) > tol)[0]
        return {"axiom": "symmetry", "points": [pts[i], pts[j]]}
    for k in range(len(pts)):
        bad = D > D[:, [k]] + D[[k], :] + tol
        if bad.any():
            i, j = np.argwhere(bad)[0]
            return {"axiom": "triangle", "points": [pts[i], pts[k], pts[j]],
                    "excess": float(D[i, j] - D[i, k] - D[k, j])}
    return None
