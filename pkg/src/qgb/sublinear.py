"""Sublinear gauges and tracking of rays up to sublinear error.

A gauge is a function ``kappa: [0, inf) -> [1, inf)`` with
``kappa(t)/t -> 0``.  Two rays track each other for a gauge when their
distance at equal index stays within a constant multiple of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .funcs import FuncSpec, _eval, values
from .qgeo import Ray, prefix
from .space import Space

GAUGES = ("sqrt", "log", "power", "table", "linear", "constant")


@dataclass(frozen=True)
class KappaSpec:
    kind: str
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.kind not in GAUGES:
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        if self.kind == "power" and not 0 < self.params.get("p", 0.5) < 1:
            raise ValueError("power exponent must lie in (0, 1)")
        if self.kind == "table":
            ts = [t for t, _ in self.params["samples"]]
            if len(ts) < 1 or any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("table samples need increasing t")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "sqrt":
            v = np.sqrt(np.maximum(t, 0))
        elif k == "log":
            v = np.log(2 + np.maximum(t, 0))
        elif k == "power":
            v = np.maximum(t, 0) ** self.params.get("p", 0.5)
        elif k == "linear":
            v = self.params.get("slope", 1.0) * t
        elif k == "constant":
            v = np.full_like(t, self.params.get("c", 1.0))
        else:
            ts, vs = zip(*self.params["samples"])
            v = np.interp(t, ts, vs)
        return np.maximum(v, 1.0)

    def to_json(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_json(cls, obj: dict | str) -> "KappaSpec":
        if isinstance(obj, str):
            return cls(obj, {})
        obj = dict(obj)
        kind = obj.pop("kind")
        if kind == "table":
            obj["samples"] = [tuple(map(float, p)) for p in obj["samples"]]
        return cls(kind, obj)


@dataclass
class SublinearReport:
    ts: list
    ratios: list
    passed: bool


def is_sublinear(kappa: KappaSpec, schedule: Sequence[float] | None = None, threshold: float = 0.1) -> SublinearReport:
    """Finite check that ``kappa(t)/t`` decreases below ``threshold`` along a doubling schedule."""
    ts = list(schedule) if schedule is not None else [2.0 ** i for i in range(4, 21)]
    ratios = [float(kappa(t)) / t for t in ts]
    tail = ratios[len(ratios) // 2:]
    ok = ratios[-1] < threshold and all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))
    return SublinearReport(ts, ratios, ok)


# ---------------------------------------------------------------------------
# concave majorant


@dataclass
class MajorantResult:
    ts: np.ndarray
    kappa: np.ndarray
    majorant: np.ndarray
    Qm: float
    concave: bool
    monotone: bool
    sandwich: bool

    def __call__(self, t):
        return np.interp(t, self.ts, self.majorant)


def _upper_hull(ts: np.ndarray, vs: np.ndarray) -> list[int]:
    hull: list[int] = []
    for i in range(len(ts)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or below the chord from a to i
            if (vs[b] - vs[a]) * (ts[i] - ts[a]) <= (vs[i] - vs[a]) * (ts[b] - ts[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _is_concave(ts: np.ndarray, vs: np.ndarray, tol: float) -> bool:
    slopes = np.diff(vs) / np.diff(ts)
    return bool(np.all(np.diff(slopes) <= tol))


def concave_majorant(ts: Sequence[float], ks: Sequence[float], tol: float = 1e-9) -> MajorantResult:
    """Smallest concave nondecreasing piecewise-linear function above the samples.

    The upper concave envelope (upper convex hull of the sample points)
    is followed by a running maximum; both steps preserve concavity.
    """
    ts = np.asarray(ts, dtype=float)
    ks = np.asarray(ks, dtype=float)
    if len(ts) < 2 or np.any(np.diff(ts) <= 0):
        raise ValueError("need at least two samples with increasing t")
    hull = _upper_hull(ts, ks)
    env = np.interp(ts, ts[hull], ks[hull])
    env = np.maximum.accumulate(env)
    scale = max(1.0, float(np.abs(env).max()))
    concave = _is_concave(ts, env, tol * scale)
    monotone = bool(np.all(np.diff(env) >= -tol * scale))
    sandwich = bool(np.all(ks <= env + tol * scale))
    Qm = float(np.max(env / ks))
    return MajorantResult(ts, ks, env, Qm, concave, monotone, sandwich)


def sawtooth(t):
    """``sqrt(t)`` times 2 or 1 on alternate dyadic blocks; sublinear but not concave."""
    t = np.asarray(t, dtype=float)
    block = np.floor(np.log2(np.maximum(t, 1)))
    return np.sqrt(t) * (1.5 + 0.5 * (-1.0) ** block)


# ---------------------------------------------------------------------------
# tracking


@dataclass
class TrackVerdict:
    windows: list           # (lo, hi) index windows
    sup_t: list             # sup of d/kappa(t) per window
    sup_norm: list          # sup of d/kappa(|g(t)|) per window
    class_t: str            # "bounded" or "growing"
    class_norm: str
    M: float
    C: float
    tol: float

    @property
    def bounded(self) -> bool:
        return self.class_norm == "bounded"


def _classify(sups: Sequence[float], tol: float) -> str:
    sups = list(sups)
    if all(s == 0 for s in sups):
        return "bounded"
    tail = sups[len(sups) // 2:] if len(sups) > 2 else sups
    for a, b in zip(tail, tail[1:]):
        if a == 0 and b > 0 or (a > 0 and b / a > 1 + tol):
            return "growing"
    return "bounded"


def doubling_windows(T: int, first: int = 2) -> list[tuple[int, int]]:
    out = []
    hi = first
    while hi <= T:
        out.append((max(1, hi // 2), hi))
        hi *= 2
    return out


def kappa_track(s: Space, g, h, kappa, T: int = 4096, tol: float = 0.25,
                windows: Sequence[tuple[int, int]] | None = None) -> TrackVerdict:
    """Sup of ``d(g(t), h(t))`` relative to the gauge over doubling windows.

    Two normalisations are reported: by ``kappa(t)`` and by
    ``kappa(|g(t)|)``.  A family is classified bounded when successive
    window sups (over the second half of the schedule) grow by at most
    ``1 + tol``; the fitted constants are the sups of the last window.
    """
    windows = list(windows) if windows is not None else doubling_windows(T)
    if not windows:
        raise ValueError("window schedule is empty")
    n = max(hi for _, hi in windows)
    try:
        gp, hp = prefix(g, n), prefix(h, n)
    except IndexError as exc:
        raise ValueError(f"windows exceed ray length: {exc}") from None
    d = np.array([s._distance(a, b) for a, b in zip(gp, hp)])
    norms = s.dists(s.basepoint, s.batch(list(gp)))
    t = np.arange(1, n + 1, dtype=float)
    r_t = d / kappa(t)
    r_n = d / kappa(norms)
    sup_t = [float(r_t[lo - 1:hi].max()) for lo, hi in windows]
    sup_n = [float(r_n[lo - 1:hi].max()) for lo, hi in windows]
    return TrackVerdict(windows, sup_t, sup_n, _classify(sup_t, tol), _classify(sup_n, tol),
                        sup_t[-1], sup_n[-1], tol)


@dataclass
class EquivalenceReport:
    agree: bool
    concave_input: bool
    Qm: float
    verdict: TrackVerdict


def tracking_equivalence_check(s: Space, g, h, kappa, T: int = 4096, tol: float = 0.25) -> EquivalenceReport:
    """Compare the index-normalised and norm-normalised tracking classifications.

    For a gauge that is not concave on the sample grid, both are computed
    with its concave majorant instead and the tolerance is widened by the
    majorant factor.
    """
    ts = np.arange(1, 2 * T + 2, dtype=float)
    ks = kappa(ts)
    concave = _is_concave(ts, ks, 1e-9) and bool(np.all(np.diff(ks) >= 0))
    Qm = 1.0
    gauge = kappa
    if not concave:
        maj = concave_majorant(ts, ks)
        Qm = maj.Qm
        gauge = lambda t: np.maximum(maj(t), 1.0)
        tol = (1 + tol) * Qm - 1
    v = kappa_track(s, g, h, gauge, T, tol)
    return EquivalenceReport(v.class_t == v.class_norm, concave, Qm, v)


@dataclass
class QuotientResult:
    classes: list
    merges: list           # (class a, class b, fitted C)


def sublinear_quotient(s: Space, rays: Sequence, classes: Sequence[Sequence[int]], kappa,
                       T: int = 4096, tol: float = 0.25) -> QuotientResult:
    """Merge boundary classes whose representative rays track for the gauge."""
    classes = [sorted(c) for c in classes]
    parent = list(range(len(classes)))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    merges = []
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            if find(a) == find(b):
                continue
            v = kappa_track(s, rays[classes[a][0]], rays[classes[b][0]], kappa, T, tol)
            if v.bounded:
                parent[max(find(a), find(b))] = min(find(a), find(b))
                merges.append((classes[a][0], classes[b][0], v.C))
    groups: dict = {}
    for i, c in enumerate(classes):
        groups.setdefault(find(i), []).extend(c)
    out = sorted((sorted(c) for c in groups.values()), key=lambda c: c[0])
    return QuotientResult(out, merges)


# ---------------------------------------------------------------------------
# sublinear slow oscillation


@dataclass
class KappaOscReport:
    rows: list         # (C, r, sup)
    passed: bool
    eps: float


def test_kappa_slow_osc(s: Space, f: FuncSpec, kappa, Cs: Sequence[float], radii: Sequence[float],
                        eps: float = 0.1, shell: float = 1.0) -> KappaOscReport:
    """Sup of ``|f(x) - f(y)|`` over ``d(x, y) <= C kappa(|x|)`` with ``x`` in a shell at radius ``r``."""
    x0 = s.basepoint
    rows = []
    ok = True
    for C in Cs:
        sups = []
        for r in radii:
            pts = [p for p in s.ball(x0, r + shell) if s._distance(p, x0) >= r - s.tol]
            worst = 0.0
            for p in pts:
                rad = C * float(kappa(s._distance(p, x0)))
                fv = values(f, s, s.ball(p, rad))
                worst = max(worst, float(np.abs(fv - _eval(f, s, p)).max()))
            sups.append(worst)
            rows.append((C, r, worst))
        ok = ok and sups[-1] < eps
    return KappaOscReport(rows, ok, eps)
