"""Named assertion batteries shared by the CLI and the acceptance tests.

Each suite returns a :class:`SuiteResult` holding its parameters, one
:class:`Check` per asserted property, and tables that the CLI writes out
as CSV (and optionally plots).
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import boundary as bd
from . import funcs as fn
from . import qgeo as qg
from . import sublinear as sl
from .oracles import brute_force_fan
from .space import build_space, check_metric


@dataclass
class Check:
    name: str
    status: str          # "pass", "fail" or "inconclusive"
    detail: dict = field(default_factory=dict)


@dataclass
class SuiteResult:
    name: str
    property: str
    params: dict
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)   # name -> (header, rows)
    seconds: float = 0.0

    @property
    def status(self) -> str:
        states = {c.status for c in self.checks}
        if "fail" in states:
            return "fail"
        return "inconclusive" if "inconclusive" in states else "pass"

    def add(self, name: str, ok: bool | None, **detail) -> Check:
        c = Check(name, "inconclusive" if ok is None else ("pass" if ok else "fail"), detail)
        self.checks.append(c)
        return c

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "property": self.property,
            "status": self.status,
            "params": self.params,
            "checks": [{"name": c.name, "status": c.status, "detail": c.detail} for c in self.checks],
        }


SUITES: dict[str, Callable[..., SuiteResult]] = {}


def suite(name: str, prop: str):
    def wrap(func):
        def run(**kw) -> SuiteResult:
            res = SuiteResult(name, prop, {})
            t = time.perf_counter()
            func(res, **kw)
            res.seconds = time.perf_counter() - t
            return res
        run.__doc__ = func.__doc__
        SUITES[name] = run
        return run
    return wrap


def run_suite(name: str, **kw) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(sorted(SUITES))}")
    return SUITES[name](**kw)


def _witnesses_valid(space, verdict: bd.MergeVerdict, k: float, N: int, depth: float) -> bool:
    for rep in (verdict.forward, verdict.backward):
        for m, ws in rep.per_m.items():
            for w in ws:
                if qg.validate(space, w.path, k, k) is not None or len(w.path) > N:
                    return False
                if w.path[-1] != w.point or w.index < max(m, math.ceil(depth * N)):
                    return False
    return True


def _partition(space, names, k, m_star, N, T=2, depth=0.5, budget=20_000, threads=None):
    rays = [qg.Ray(space, n, k, k) for n in names]
    return bd.boundary_partition(space, rays, k, m_star, N, T, depth, budget, threads=threads)


def _partition_table(P: bd.BoundaryPartition) -> tuple:
    rows = [(P.rays[i], P.rays[j], v) for (i, j), v in sorted(P.verdicts.items())]
    return ("ray_a", "ray_b", "verdict"), rows


# frozen oracle counts for n = 1..4 (computed once with oracles.brute_force_fan)
FAN_ORACLE = {
    ("line", 1, 0): [1, 2, 2, 2],
    ("line", 1, 1): [1, 5, 18, 36],
    ("line", 2, 2): [1, 9, 75, 621],
    ("grid2d", 1, 0): [1, 4, 12, 28],
    ("grid2d", 1, 1): [1, 13, 124, 864],
    ("grid2d", 2, 2): [1, 41, 1433, 49441],
    ("tree", 1, 0): [1, 4, 12, 36],
    ("tree", 1, 1): [1, 17, 164, 1272],
    ("tree", 2, 2): [1, 161, 11341, 790721],
}

SPACES = {
    "line": {"kind": "line", "basepoint": 0},
    "grid2d": {"kind": "grid2d", "basepoint": [0, 0]},
    "tree": {"kind": "tree", "degree": 4, "basepoint": "root"},
}


@suite("fan-oracle", "fan enumeration agrees with a brute-force enumerator")
def _fan_oracle(res: SuiteResult, live_limit: int = 100_000, threads=None, **_):
    """Engine counts against the brute force, live where cheap and frozen otherwise."""
    res.params = {"spaces": list(SPACES), "qQ": [[1, 0], [1, 1], [2, 2]], "n_max": 4}
    rows = []
    for (kind, q, Q), frozen in FAN_ORACLE.items():
        S = build_space(SPACES[kind])
        x0 = S.basepoint
        for n in range(1, 5):
            engine = qg.count_fan(S, x0, q, Q, n)
            live = frozen[n - 1] <= live_limit
            oracle = len(brute_force_fan(S, x0, q, Q, n)) if live else frozen[n - 1]
            rows.append((kind, q, Q, n, engine, oracle, "live" if live else "frozen"))
            res.add(f"{kind} ({q},{Q}) n={n}", engine == oracle == frozen[n - 1],
                    engine=engine, oracle=oracle, source="live" if live else "frozen")
    line = qg.enumerate_fan(build_space(SPACES["line"]), 0, 1, 0, 4)
    res.add("line (1,0) n=4 lists 2 sequences", len(line.sequences) == 2 and not line.truncated)
    res.add("grid2d (1,0) n=3 lists 12 sequences",
            len(qg.enumerate_fan(build_space(SPACES["grid2d"]), (0, 0), 1, 0, 3).sequences) == 12)
    res.add("tree (1,0) n=3 lists 12 sequences",
            len(qg.enumerate_fan(build_space(SPACES["tree"]), (), 1, 0, 3).sequences) == 12)
    res.tables["fan_counts"] = (("space", "q", "Q", "n", "engine", "oracle", "oracle_source"), rows)


@suite("grid-one-point", "sampled grid rays all merge into one boundary point")
def _grid(res: SuiteResult, k=2, m_star=4, N=48, T=2, depth=0.5, budget=20_000, threads=None, **_):
    names = ["axis+x", "axis-x", "axis+y", "axis-y", "diag++", "diag--"]
    res.params = {"space": SPACES["grid2d"], "rays": names, "k": k, "m_star": m_star, "N": N, "T": T, "depth": depth}
    S = build_space(SPACES["grid2d"])
    P = _partition(S, names, k, m_star, N, T, depth, budget, threads)
    res.add("one class", len(P.classes) == 1, classes=P.classes)
    res.add("every merge witnessed by validated paths",
            all(_witnesses_valid(S, v, k, N, depth) for v in P.details.values()))
    res.tables["verdicts"] = _partition_table(P)
    res.tables["_partition"] = P


@suite("tree-separation", "rays in distinct tree branches stay apart; trees are 0-hyperbolic")
def _tree(res: SuiteResult, k=2, m=6, N=30, m_star=8, depth=0.5, budget=200_000, threads=None, **_):
    S = build_space(SPACES["tree"])
    names = [f"branch:{b}" for b in range(4)]
    res.params = {"space": SPACES["tree"], "k": k, "m": m, "N": N, "m_star": m_star, "delta_radius": 5}
    rays = [qg.Ray(S, n, k, k) for n in names]
    # the asserted claim: at m the cone of one branch ray meets no point of another up to index N
    rows = []
    for a, b in [(0, 1), (1, 0)]:
        g, h = rays[a], rays[b]
        targets = [h.at(i) for i in range(m, N + 1)]
        r = qg.reach(S, qg.prefix(g, m), k, k, targets, horizon=N, budget=budget)
        witness = [list(p) for p in r.path] if r.path else None
        if r.path is not None:
            assert qg.validate(S, r.path, k, k) is None
        rows.append((names[a], names[b], m, r.status, r.nodes, witness))
        ok = True if r.status == "out" else (False if r.status == "in" else None)
        res.add(f"cone of {names[a]} at m={m} misses {names[b]} up to N={N}", ok,
                status=r.status, nodes=r.nodes, witness=witness)
    proofs = []
    for m_try in range(1, m_star + 1):
        r = qg.cone_avoids_region(S, rays[0], k, k, m_try, "branch:1", budget)
        proofs.append((m_try, r.status, r.nodes))
    first = next((mm for mm, st, _ in proofs if st == "out"), None)
    res.add("some m <= m_star gives a gate proof of disjointness", first is not None, first_proved_m=first)
    P = _partition(S, names, k, m_star, N, 2, depth, 20_000, threads)
    res.add("4 branch rays give 4 classes", len(P.classes) == 4, classes=P.classes)
    est = bd.estimate_delta(S, radius=5)
    res.add("delta estimate over ball(root, 5) is 0", est.delta == 0.0, delta=est.delta, sample=est.sample)
    res.tables["cone_probe"] = (("ray", "other", "m", "status", "nodes", "witness"), rows)
    res.tables["gate_proofs"] = (("m", "status", "nodes"), proofs)
    res.tables["verdicts"] = _partition_table(P)
    res.tables["_partition"] = P


@suite("wedge-flats", "distinct flats and both line ends give distinct points; one flat gives one")
def _wedge(res: SuiteResult, k=2, m_star=12, N=48, budget=20_000, threads=None, **_):
    spec = {"kind": "wedge_flats", "basepoint": [0, 0, 0]}
    S = build_space(spec)
    names = ["flat:3:+x", "flat:5:+x", "line+", "line-"]
    res.params = {"space": spec, "rays": names, "k": k, "m_star": m_star, "N": N}
    P = _partition(S, names, k, m_star, N, budget=budget, threads=threads)
    res.add("4 classes", len(P.classes) == 4, classes=P.classes,
            proofs={f"{P.rays[i]}|{P.rays[j]}": v.disjoint_proof for (i, j), v in P.details.items()})
    flat = ["flat:3:+x", "flat:3:+y", "flat:3:diag"]
    P2 = _partition(S, flat, k, m_star, N, budget=budget, threads=threads)
    res.add("rays inside one flat merge", len(P2.classes) == 1, classes=P2.classes)
    res.add("in-flat merges witnessed by validated paths",
            all(_witnesses_valid(S, v, k, N, 0.5) for v in P2.details.values()))
    res.tables["verdicts"] = _partition_table(P)
    res.tables["_partition"] = P


@suite("sqrt-rays", "two square-root rays: separate without bridges, merged with bridges and sublinearly")
def _sqrt(res: SuiteResult, k=2, m_star=24, N=48, tau=0.25, threads=None, **_):
    plain = build_space({"kind": "sqrt_rays", "bridges": False})
    bridged = build_space({"kind": "sqrt_rays", "bridges": True})
    names = ["horizontal", "vertical"]
    res.params = {"k": k, "m_star": m_star, "N": N, "tau": tau, "kappa": "sqrt"}
    P = _partition(plain, names, k, m_star, N, threads=threads)
    res.add("without bridges: 2 classes", len(P.classes) == 2, classes=P.classes,
            proof=P.details[(0, 1)].disjoint_proof)
    f = fn.clopen_indicator("horizontal", "vertical")
    rays = [qg.Ray(plain, n, k, k) for n in names]
    gso = fn.test_geom_slow_osc(plain, f, rays, k, [8, 24], eps=0.1)
    res.add("indicator passes the cone-diameter test", gso.passed, per_ray=gso.per_ray)
    lims = [fn.limit_along_ray(plain, f, r, [100, 1000]) for r in rays]
    res.add("indicator limits are 1 and 0", [l.value for l in lims] == [1.0, 0.0] and all(l.certified for l in lims),
            limits=[l.value for l in lims])
    P2 = _partition(bridged, names, k, m_star, N, threads=threads)
    res.add("with bridges: 1 class", len(P2.classes) == 1, classes=P2.classes)
    res.add("bridge merges witnessed by validated paths", all(_witnesses_valid(bridged, v, k, N, 0.5) for v in P2.details.values()))
    kappa = sl.KappaSpec("sqrt")
    Qt = sl.sublinear_quotient(plain, rays, P.classes, kappa, tol=tau)
    C = Qt.merges[0][2] if Qt.merges else None
    res.add("sqrt quotient merges the bridgeless pair", len(Qt.classes) == 1, classes=Qt.classes)
    res.add("fitted tracking constant at most 1 + tau", C is not None and C <= 1 + tau, C=C)
    res.tables["gso"] = (("ray", "m", "lower", "upper", "exhausted", "members"),
                         [(r.ray, r.m, r.lower, r.upper, r.exhausted, r.members) for r in gso.rows])
    res.tables["verdicts"] = _partition_table(P)
    res.tables["_partition"] = P


@suite("product-trivial", "products have a one-point boundary; concatenated paths are (2k,2k)")
def _product(res: SuiteResult, pairs=100, seed=0, k=2, m_star=4, N=48, threads=None, **_):
    rng = random.Random(seed)
    tspec = {"kind": "product", "factors": [SPACES["tree"], SPACES["tree"]]}
    TT = build_space(tspec)
    T = build_space(SPACES["tree"])
    bad = 0
    for _ in range(pairs):
        f = qg.random_quasi_geodesic(T, (), 1, 1, rng.randint(1, 8), rng)
        g = qg.random_quasi_geodesic(T, (), 1, 1, rng.randint(1, 8), rng)
        h = qg.product_concat(f, g)
        if len(h) != len(f) + len(g) - 1 or qg.validate(TT, h.points, 2, 2) is not None:
            bad += 1
    res.add(f"{pairs} random (1,1) pairs concatenate to (2,2)", bad == 0, failures=bad)
    spec = {"kind": "product", "factors": [SPACES["line"], SPACES["line"]]}
    S = build_space(spec)
    names = ["x:axis+x", "x:axis-x", "y:axis+x", "y:axis-x"]
    res.params = {"pairs": pairs, "seed": seed, "space": spec, "rays": names, "k": k, "m_star": m_star, "N": N}
    P = _partition(S, names, k, m_star, N, threads=threads)
    res.add("four basic rays give 1 class", len(P.classes) == 1, classes=P.classes)
    res.tables["verdicts"] = _partition_table(P)
    res.tables["_partition"] = P


@suite("block-union", "rays in a two-block tree-times-line union merge into one point")
def _block(res: SuiteResult, k=3, m_star=4, N=48, budget=20_000, threads=None, **_):
    spec = {"kind": "block_union"}
    S = build_space(spec)
    names = ["wall:+s", "wall:-s", "wall:+t", "wall:-t", "b0:tree", "b1:tree"]
    res.params = {"space": spec, "rays": names, "k": k, "m_star": m_star, "N": N, "budget": budget}
    P = _partition(S, names, k, m_star, N, budget=budget, threads=threads)
    res.add("k <= 4", k <= 4, k=k)
    res.add("6 rays give 1 class", len(P.classes) == 1, classes=P.classes)
    res.add("merges witnessed by validated paths", all(_witnesses_valid(S, v, k, N, 0.5) for v in P.details.values()))
    res.tables["verdicts"] = _partition_table(P)
    res.tables["_partition"] = P


def _builder_rays():
    path = {"kind": "explicit_graph", "vertices": list(range(200)),
            "edges": [[i, i + 1] for i in range(199)], "basepoint": 0}
    return [
        (SPACES["line"], ["axis+x", "axis-x"]),
        (SPACES["grid2d"], ["axis+x", "diag++"]),
        (SPACES["tree"], ["branch:0"]),
        ({"kind": "product", "factors": [SPACES["line"], SPACES["line"]]}, ["x:axis+x"]),
        ({"kind": "wedge_flats"}, ["line+", "flat:2:+y"]),
        ({"kind": "sqrt_rays"}, ["horizontal", "vertical"]),
        ({"kind": "sqrt_rays", "bridges": True}, ["horizontal"]),
        ({"kind": "block_union"}, ["wall:+s", "b1:tree"]),
        (path, [list(range(200))]),
    ]


@suite("function-suite", "cone-diameter, Cauchy and bounded-approach tests on test functions")
def _functions(res: SuiteResult, k=2, eps=0.15, threads=None, **_):
    res.params = {"k": k, "eps": eps, "m_schedule": [4, 10, 20]}
    gso_rows = []
    for spec, rays in _builder_rays():
        S = build_space(spec)
        rs = [qg.Ray(S, r, k, k) if isinstance(r, str) else qg.QuasiGeodesic(tuple(r), 1, 0, "path") for r in rays]
        rep = fn.test_geom_slow_osc(S, fn.vanishing(1), rs, k, [4, 10, 20], eps, budget=3000)
        res.add(f"vanishing passes on {S.kind}", rep.passed, per_ray=rep.per_ray)
        gso_rows += [(S.kind, r.ray, r.m, r.lower, r.upper, r.exhausted) for r in rep.rows]
    # nesting: exhausted cones at a common horizon shrink as m grows
    G = build_space(SPACES["grid2d"])
    for f in (fn.vanishing(1), fn.angle_probe()):
        diams = []
        for m in range(1, 7):
            c = qg.cone(G, qg.Ray(G, "axis+x"), 1, 1, m, 6, budget=200_000)
            pts = sorted({p for p, i in c.members if i >= m})
            v = fn.values(f, G, pts)
            diams.append((m, float(v.max() - v.min()), c.exhausted))
        mono = all(e for _, _, e in diams) and all(b[1] <= a[1] + 1e-12 for a, b in zip(diams, diams[1:]))
        res.add(f"exhausted cone diameters of {f.kind} are nonincreasing", mono, diameters=diams)
    probe = fn.test_geom_slow_osc(G, fn.angle_probe(), [qg.Ray(G, "axis+x")], 2, [1, 2, 3, 4], 0.2)
    low = [r.lower for r in probe.rows]
    res.add("angle probe fails with diameter >= 0.2 on exhausted cones, m <= 4",
            probe.verdict == "fail" and all(r.exhausted for r in probe.rows) and min(low) >= 0.2, lower=low)
    S = build_space({"kind": "sqrt_rays"})
    lims = [
        fn.limit_along_ray(G, fn.vanishing(1), qg.Ray(G, "axis+x"), [1000, 2000]),
        fn.limit_along_ray(G, fn.angle_probe(), qg.Ray(G, "axis+x"), [1000, 2000]),
        fn.limit_along_ray(S, fn.clopen_indicator("horizontal"), qg.Ray(S, "horizontal"), [1000, 2000]),
        fn.limit_along_ray(S, fn.clopen_indicator("horizontal"), qg.Ray(S, "vertical"), [1000, 2000]),
    ]
    res.add("Cauchy tails below 1e-3", all(l.certified and l.tails[-1][1] < 1e-3 for l in lims),
            tails=[l.tails[-1][1] for l in lims])
    seq = [qg.geodesic_to(G, (n, 1)) for n in range(5, 400)]
    ba = fn.test_bounded_approach_limit(G, fn.vanishing(1), seq, qg.Ray(G, "axis+x"), 2, 0.01)
    res.add("bounded-approach limit on the (n,1) family", ba.status == "pass", worst=ba.worst)
    u = fn.uniform_limit([fn.vanishing(1 / n) for n in range(1, 41)], [2.0 ** -n for n in range(1, 41)], 10)
    rep = fn.test_geom_slow_osc(G, u.func, [qg.Ray(G, "axis+x"), qg.Ray(G, "axis+y")], 2, [10, 30, 60], eps)
    res.add("truncated series passes the cone-diameter test", rep.passed, error_bound=u.error_bound)
    res.tables["gso"] = (("space", "ray", "m", "lower", "upper", "exhausted"), gso_rows)


def _random_grid_path(S, rng, q, Q, lo=8, hi=30):
    return qg.random_quasi_geodesic(S, S.basepoint, q, Q, rng.randint(lo, hi), rng)


@suite("constant-tracking", "limit, approach and net constructions keep their stated constants")
def _constants(res: SuiteResult, instances=50, seed=0, threads=None, **_):
    rng = random.Random(seed)
    res.params = {"instances": instances, "seed": seed}
    G = build_space(SPACES["grid2d"])
    L = build_space(SPACES["line"])
    W = build_space({"kind": "wedge_flats"})
    rows = []
    # limit extraction
    fails = 0
    done = 0
    while done < instances:
        k, M = 1, rng.choice([2, 3, 4])
        D = rng.randint(4, 8)
        family = [_random_grid_path(G, rng, k, k, D + 2, D + 20) for _ in range(60)]
        try:
            lim = qg.extract_limit_ray(G, family, k, M, D)
        except qg.FamilyTooSmall:
            continue
        done += 1
        ok = qg.validate(G, lim.ray.points, k, k + 2 * M) is None
        fails += not ok
        rows.append(("limit", k, M, D, ok))
    res.add(f"limit rays validate as (k, k+2M) on {instances} instances", fails == 0, failures=fails)
    # bounded approach
    fails = 0
    for _ in range(instances):
        k, C = 1, rng.choice([1, 2, 3])
        base = _random_grid_path(G, rng, k, k, 20, 40)
        g = []
        for p in base.points:
            r = rng.randint(0, C - 1)
            a = rng.randint(-r, r)
            g.append((p[0] + a, p[1] + rng.choice([-1, 1]) * (r - abs(a))))
        g = qg.QuasiGeodesic(tuple(g), k, k + 2 * C)
        g_seq = [qg.QuasiGeodesic(base.points[:n], k, k) for n in range(2, len(base) + 1)]
        approach = qg.boundedly_approaches(G, g_seq, g, C, [(m, m - 1) for m in range(2, len(base) + 1)])
        ok = approach.ok and qg.validate(G, g.points, k, k + 2 * C) is None
        fails += not ok
        rows.append(("approach", k, C, len(base), ok))
    res.add(f"bounded-approach limits validate as (k, k+2C) on {instances} instances", fails == 0, failures=fails)
    # nets
    fails = 0
    spaces = [G, L, W]
    for i in range(instances):
        S = spaces[i % 3]
        k, M = rng.choice([1, 2]), rng.choice([1, 2, 3])
        g = qg.random_quasi_geodesic(S, S.basepoint, k, k, rng.randint(5, 15), rng)
        push = qg.net_pushforward(S, g, M)
        close = all(d < M for d in push.offsets)
        ok = close and qg.validate(S, push.ray.points, k + 2 * M, k + 2 * M) is None
        fails += not ok
        rows.append(("net", k, M, S.kind, ok))
    res.add(f"net pushforwards validate as (k+2M, k+2M) on {instances} instances", fails == 0, failures=fails)
    res.tables["instances"] = (("construction", "k", "constant", "size", "ok"), rows)


@suite("sublinear", "concave majorants, tracking equivalence and ends versus merges")
def _sublinear(res: SuiteResult, tau=0.25, threads=None, **_):
    res.params = {"tau": tau, "majorant_samples": "t = 1..2^14"}
    t = np.arange(1, 2 ** 14 + 1, dtype=float)
    maj_rows = []
    for name, ks in (("sqrt", sl.KappaSpec("sqrt")(t)), ("log", sl.KappaSpec("log")(t)), ("sawtooth", sl.sawtooth(t))):
        m = sl.concave_majorant(t, ks)
        ok = m.concave and m.monotone and m.sandwich and np.isfinite(m.Qm)
        if name == "sawtooth":
            ok = ok and m.Qm <= 2
        else:
            ok = ok and abs(m.Qm - 1) < 1e-9
        res.add(f"majorant sandwich for {name}", ok, Qm=m.Qm)
        maj_rows.append((name, m.Qm, m.concave, m.monotone, m.sandwich))
    res.tables["majorants"] = (("gauge", "Qm", "concave", "monotone", "sandwich"), maj_rows)
    S = build_space({"kind": "sqrt_rays"})
    T = build_space(SPACES["tree"])
    G = build_space(SPACES["grid2d"])
    shifted = qg.QuasiGeodesic(tuple((i, 1) for i in range(5000)), 1, 0, "shifted")
    pairs = [
        ("sqrt pair", S, qg.Ray(S, "horizontal"), qg.Ray(S, "vertical"), sl.KappaSpec("sqrt"), 4096),
        ("sqrt pair, sawtooth", S, qg.Ray(S, "horizontal"), qg.Ray(S, "vertical"), sl.sawtooth, 4096),
        ("tree branches, sqrt", T, qg.Ray(T, "branch:0"), qg.Ray(T, "branch:1"), sl.KappaSpec("sqrt"), 512),
        ("tree branches, log", T, qg.Ray(T, "branch:0"), qg.Ray(T, "branch:1"), sl.KappaSpec("log"), 512),
        ("grid shift", G, qg.Ray(G, "axis+x"), shifted, sl.KappaSpec("sqrt"), 4096),
        ("g = h", G, qg.Ray(G, "axis+x"), qg.Ray(G, "axis+x"), sl.KappaSpec("log"), 4096),
    ]
    track_rows = []
    for label, sp, g, h, kappa, Tmax in pairs:
        e = sl.tracking_equivalence_check(sp, g, h, lambda x, k=kappa: np.maximum(np.asarray(k(x), float), 1.0), Tmax, tau)
        res.add(f"tracking classifications agree: {label}", e.agree,
                by_index=e.verdict.class_t, by_norm=e.verdict.class_norm, Qm=e.Qm)
        for (lo, hi), a, b in zip(e.verdict.windows, e.verdict.sup_t, e.verdict.sup_norm):
            track_rows.append((label, lo, hi, a, b))
    res.tables["tracking"] = (("pair", "window_lo", "window_hi", "sup_ratio_t", "sup_ratio_norm"), track_rows)
    ends_rows = []
    setups = [
        (SPACES["line"], ["axis+x", "axis-x"], [2, 4, 8], 32, 2, 8),
        (SPACES["grid2d"], ["axis+x", "axis-y", "diag++"], [2, 4, 8], 32, 2, 4),
        (SPACES["tree"], ["branch:0", "branch:1"], [1, 2, 3], 8, 2, 8),
        ({"kind": "wedge_flats"}, ["flat:3:+x", "flat:3:+y", "line+", "line-"], [4, 6, 8], 20, 2, 12),
    ]
    for spec, names, radii, R, k, m_star in setups:
        sp = build_space(spec)
        ends = bd.coarse_ends(sp, radii, R, keep_labels=True)
        rays = [qg.Ray(sp, n, k, k) for n in names]
        P = bd.boundary_partition(sp, rays, k, m_star, 48)
        ends_of = [bd.ray_to_end(sp, r, radii, R, ends) for r in rays]
        ok = True
        for (i, j), v in P.verdicts.items():
            if v != "not_merged_within_budget" and ends_of[i] != ends_of[j]:
                ok = False
        res.add(f"merged rays share ends on {sp.kind}", ok, classes=P.classes, counts=ends.counts)
        for r, c in zip(ends.radii, ends.counts):
            ends_rows.append((sp.kind, r, c))
    res.tables["ends"] = (("space", "r", "component_count"), ends_rows)


@suite("metric-checks", "builders satisfy the metric axioms on finite balls")
def _metric(res: SuiteResult, threads=None, **_):
    specs = [
        (SPACES["line"], 30), (SPACES["grid2d"], 8), (SPACES["tree"], 3),
        ({"kind": "product", "factors": [SPACES["line"], SPACES["line"]]}, 6),
        ({"kind": "wedge_flats"}, 4), ({"kind": "block_union"}, 3),
        ({"kind": "sqrt_rays", "rule": "path"}, 200), ({"kind": "sqrt_rays", "bridges": True}, 60),
    ]
    res.params = {"balls": [[s, r] for s, r in specs]}
    for spec, r in specs:
        S = build_space(spec)
        v = check_metric(S, S.ball(S.basepoint, r))
        res.add(f"{spec['kind']} ball({r})", v is None, violation=v)
