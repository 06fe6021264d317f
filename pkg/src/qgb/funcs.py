"""Bounded test functions on spaces and the oscillation tests run on them.

A function is described by a :class:`FuncSpec` (a kind plus parameters)
so it can be read from JSON and shipped to worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qgeo import QuasiGeodesic, Ray, boundedly_approaches, cone, cone_avoids_region, prefix
from .space import Point, Space, SpaceError

KINDS = ("vanishing", "clopen_indicator", "angle_probe", "custom_table", "series", "constant")


@dataclass(frozen=True)
class FuncSpec:
    kind: str
    params: dict = field(default_factory=dict, hash=False)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        for key, val in self.params.items():
            if key == "terms":
                out[key] = [[w, f.to_json()] for w, f in val]
            else:
                out[key] = val
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "FuncSpec":
        obj = dict(obj)
        kind = obj.pop("kind", None)
        if kind not in KINDS:
            raise ValueError(f"unknown function kind {kind!r}")
        if kind == "series":
            obj["terms"] = [(float(w), cls.from_json(f)) for w, f in obj["terms"]]
        return cls(kind, obj)


def vanishing(c: float = 1.0) -> FuncSpec:
    """``1 / (1 + c * |x|)``: tends to 0 at infinity."""
    if c <= 0:
        raise ValueError("c must be positive")
    return FuncSpec("vanishing", {"c": float(c)})


def clopen_indicator(region: str, complement: str | None = None) -> FuncSpec:
    """Indicator of a named region; ``complement`` names a region covering the rest far out."""
    return FuncSpec("clopen_indicator", {"region": region, "complement": complement})


def angle_probe() -> FuncSpec:
    return FuncSpec("angle_probe", {})


def custom_table(values: dict, default: float = 0.0) -> FuncSpec:
    return FuncSpec("custom_table", {"values": values, "default": float(default)})


def constant(c: float) -> FuncSpec:
    return FuncSpec("constant", {"c": float(c)})


def series(terms: Sequence[tuple[float, FuncSpec]]) -> FuncSpec:
    return FuncSpec("series", {"terms": [(float(w), f) for w, f in terms]})


def _table_key(x) -> str:
    import json
    from .space import _to_json
    return json.dumps(_to_json(x))


def _check_kind(f: FuncSpec, s: Space) -> None:
    if f.kind == "angle_probe" and s.kind != "grid2d":
        raise SpaceError("angle_probe is only defined on grid2d")
    if f.kind == "clopen_indicator":
        s.region(f.params["region"])


def eval_function(f: FuncSpec, s: Space, x: Point) -> float:
    _check_kind(f, s)
    return _eval(f, s, x)


def _eval(f: FuncSpec, s: Space, x: Point) -> float:
    k = f.kind
    if k == "vanishing":
        return 1.0 / (1.0 + f.params["c"] * s._distance(x, s.basepoint))
    if k == "clopen_indicator":
        return 1.0 if s.region(f.params["region"]).contains(x) else 0.0
    if k == "angle_probe":
        # |atan2| is continuous across the negative x axis, unlike a [0, 1) wrap
        return abs(math.atan2(x[1] - s.basepoint[1], x[0] - s.basepoint[0])) / (2 * math.pi)
    if k == "custom_table":
        return float(f.params["values"].get(_table_key(x), f.params["default"]))
    if k == "series":
        return sum(w * _eval(g, s, x) for w, g in f.params["terms"])
    if k == "constant":
        return f.params["c"]
    raise ValueError(f"unknown function kind {k!r}")


def values(f: FuncSpec, s: Space, points: Sequence[Point]) -> np.ndarray:
    _check_kind(f, s)
    if f.kind == "vanishing" and len(points):
        d = s.dists(s.basepoint, s.batch(list(points)))
        return 1.0 / (1.0 + f.params["c"] * d)
    return np.array([_eval(f, s, x) for x in points], dtype=float)


def sup_bound(f: FuncSpec) -> float:
    """A bound on ``sup |f|``."""
    k = f.kind
    if k in ("vanishing", "clopen_indicator"):
        return 1.0
    if k == "angle_probe":
        return 0.5
    if k == "custom_table":
        vals = [abs(v) for v in f.params["values"].values()] + [abs(f.params["default"])]
        return max(vals)
    if k == "series":
        return sum(abs(w) * sup_bound(g) for w, g in f.params["terms"])
    return abs(f.params["c"])


def tail_oscillation(f: FuncSpec, rho: float) -> float | None:
    """Bound on the oscillation of ``f`` outside ``ball(x0, rho)``, when known."""
    k = f.kind
    if k == "vanishing":
        return 1.0 / (1.0 + f.params["c"] * max(rho, 0.0))
    if k == "constant":
        return 0.0
    if k == "series":
        parts = [tail_oscillation(g, rho) for _, g in f.params["terms"]]
        if any(p is None for p in parts):
            return None
        return sum(abs(w) * p for (w, _), p in zip(f.params["terms"], parts))
    return None


# ---------------------------------------------------------------------------
# slow oscillation


@dataclass
class OscReport:
    radii: list
    sups: list
    passed: bool
    eps: float
    M: float


def test_slowly_oscillating(s: Space, f: FuncSpec, radii: Sequence[float], M: float,
                            eps: float = 0.1, shell: float | None = None) -> OscReport:
    """Sup of ``|f(x) - f(y)|`` over ``d(x, y) <= M`` with ``x`` in the shell ``r <= |x| <= r + shell``.

    Passes when the sup at the largest radius is below ``eps`` and the
    sups do not increase along the schedule.
    """
    radii = list(radii)
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    shell = 2 * M if shell is None else shell
    x0 = s.basepoint
    sups = []
    for r in radii:
        pts = [p for p in s.ball(x0, r + shell) if s._distance(p, x0) >= r - s.tol]
        worst = 0.0
        for p in pts:
            near = s.ball(p, M)
            fv = values(f, s, near)
            worst = max(worst, float(np.abs(fv - _eval(f, s, p)).max()))
        sups.append(worst)
    ok = sups[-1] < eps and all(b <= a + 1e-12 for a, b in zip(sups, sups[1:]))
    return OscReport(radii, sups, ok, eps, M)


# ---------------------------------------------------------------------------
# geometric slow oscillation


@dataclass
class GsoRow:
    ray: str
    m: int
    lower: float          # diameter of f over the cone members found (a true lower bound)
    upper: float | None   # certified bound on the diameter over the whole cone
    exhausted: bool       # the truncated cone was enumerated completely
    members: int
    certificate: str


@dataclass
class GsoReport:
    rows: list
    eps: float
    k: float
    verdict: str            # "pass", "fail" or "inconclusive"
    per_ray: dict

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _indicator_certificate(s: Space, f: FuncSpec, g, k: float, m: int, budget: int) -> float | None:
    """Zero when the whole cone provably lies on one side of the indicator."""
    region = f.params["region"]
    other = f.params.get("complement")
    if other is None or not isinstance(g, Ray):
        return None
    rho = (m - 1) / k - k
    if rho <= 0:
        return None
    inside = s.region(region).contains(g.at(m))
    avoid = other if inside else region
    r = cone_avoids_region(s, g, k, k, m, avoid, budget)
    return 0.0 if r.status == "out" else None


def test_geom_slow_osc(s: Space, f: FuncSpec, rays: Sequence, k: float, m_schedule: Sequence[int],
                       eps: float, N: int | None = None, budget: int = 20_000,
                       horizon_extra: int = 3) -> GsoReport:
    """Cone diameters of ``f`` along each ray for a schedule of ``m``.

    For every ``(ray, m)`` the cone truncated at index ``N`` (default
    ``m + horizon_extra``) is enumerated within ``budget``; the diameter of
    ``f`` over the members found is a lower bound for the full cone.  An
    upper bound is certified either from the tail oscillation of ``f``
    (cone points of index ``>= m`` have norm at least ``(m-1)/k - k``) or,
    for indicators, by proving the cone stays on one side.

    A ray passes once some scheduled ``m`` has a certified diameter below
    ``eps``; the test fails definitively when some ray keeps a lower bound
    of at least ``eps`` at every scheduled ``m``.
    """
    _check_kind(f, s)
    rows = []
    per_ray = {}
    for g in rays:
        name = g.tag if getattr(g, "tag", None) else "seq"
        passed, persistent = False, True
        for m in m_schedule:
            horizon = N if N is not None else m + horizon_extra
            res = cone(s, g, k, k, m, horizon, budget)
            pts = sorted({p for p, i in res.members if i >= m})
            fv = values(f, s, pts)
            lower = float(fv.max() - fv.min()) if len(fv) else 0.0
            rho = (m - 1) / k - k
            upper, cert = None, "none"
            tail = tail_oscillation(f, rho)
            if tail is not None:
                upper, cert = tail, "tail"
            elif f.kind == "clopen_indicator":
                upper = _indicator_certificate(s, f, g, k, m, budget)
                cert = "one-sided" if upper is not None else "none"
            rows.append(GsoRow(name, m, lower, upper, res.exhausted, len(pts), cert))
            if upper is not None and upper < eps:
                passed = True
            if lower < eps:
                persistent = False
        per_ray[name] = "pass" if passed else ("fail" if persistent else "inconclusive")
    verdicts = set(per_ray.values())
    verdict = "fail" if "fail" in verdicts else ("pass" if verdicts == {"pass"} else "inconclusive")
    return GsoReport(rows, eps, k, verdict, per_ray)


# ---------------------------------------------------------------------------
# limits


@dataclass
class LimitCertificate:
    value: float
    tails: list            # (t, observed tail diameter over [t, L])
    certified: bool
    bound: float | None    # certified oscillation bound for the infinite tail from the last t


def limit_along_ray(s: Space, f: FuncSpec, g, tails: Sequence[int], eps: float = 1e-3,
                    length: int = 5000) -> LimitCertificate:
    """Value of ``f`` at the end of ``g`` with a Cauchy certificate.

    The observed diameter of ``f(g(i))`` over each tail ``[t, length]`` is
    recorded; the certificate holds when the last one is below ``eps``.
    Functions with a known tail bound also get a bound valid for the whole
    infinite tail (``g(i)`` has norm at least ``(i-1)/q - Q``).
    """
    tails = sorted(tails)
    if not tails or tails[-1] >= length:
        raise ValueError("tail starts must be below the ray length")
    pts = prefix(g, length) if isinstance(g, Ray) else g.points[:length]
    fv = values(f, s, list(pts))
    rows = []
    for t in tails:
        seg = fv[t - 1:]
        rows.append((t, float(seg.max() - seg.min())))
    q, Q = (g.q, g.Q)
    bound = tail_oscillation(f, (tails[-1] - 1) / q - Q)
    return LimitCertificate(float(fv[-1]), rows, rows[-1][1] < eps, bound)


@dataclass
class ApproachLimitReport:
    status: str        # "pass", "fail" or "not_applicable"
    limit: float | None = None
    worst: float | None = None
    detail: dict | None = None


def test_bounded_approach_limit(s: Space, f: FuncSpec, g_seq: Sequence[QuasiGeodesic], g, C: float,
                                eps: float, schedule: Sequence[tuple[int, int]] | None = None,
                                tail_from: float = 0.5, length: int = 2000) -> ApproachLimitReport:
    """Check that ``f`` at the endpoints of ``g_n`` tends to the limit of ``f`` along ``g``."""
    if schedule is None:
        schedule = [(m, max(1, len(g_seq) // 4)) for m in (2, 3, 4)]
    pre = boundedly_approaches(s, g_seq, g, C, schedule)
    if not pre.ok:
        return ApproachLimitReport("not_applicable", detail=pre.failure)
    lim = limit_along_ray(s, f, g, [length // 2], eps, length)
    start = int(len(g_seq) * tail_from)
    ends = [h.points[-1] for h in g_seq[start:]]
    diffs = np.abs(values(f, s, ends) - lim.value)
    worst = float(diffs.max())
    return ApproachLimitReport("pass" if worst < eps else "fail", lim.value, worst)


@dataclass
class SeriesResult:
    func: FuncSpec
    error_bound: float


def uniform_limit(f_seq: Sequence[FuncSpec], weights: Sequence[float], truncate: int | None = None) -> SeriesResult:
    """Truncated weighted series of bounded functions with its sup-norm error bound."""
    if len(f_seq) != len(weights) or not f_seq:
        raise ValueError("need one weight per function")
    if len(f_seq) == 1 and weights[0] == 1:
        return SeriesResult(f_seq[0], 0.0)
    n = len(f_seq) if truncate is None else truncate
    kept = list(zip(weights[:n], f_seq[:n]))
    err = sum(abs(w) * sup_bound(f) for w, f in zip(weights[n:], f_seq[n:]))
    if all(f.kind == "constant" for _, f in kept):
        return SeriesResult(constant(sum(w * f.params["c"] for w, f in kept)), err)
    return SeriesResult(series(kept), err)
