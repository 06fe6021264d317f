"""Command-line front end.

Every subcommand writes its artifacts (JSON, CSV, DOT, optional PNG) into
``--out`` and reports through its exit code:

    0  success, or the tested property held
    1  the tested property failed
    2  bad input, configuration or flags
    3  budget exhausted with an inconclusive result
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import signal
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import boundary as bd
from . import funcs as fn
from . import qgeo as qg
from . import sublinear as sl
from .space import SpaceError, build_space, check_metric

OK, FAIL, USAGE, INCONCLUSIVE = 0, 1, 2, 3


@dataclass
class RunConfig:
    tol: float = 0.25            # tracking tolerance
    budget: int = 20_000         # expanded-node budget per search
    time_budget: float | None = None   # seconds for the whole command
    k: float = 2
    m_star: int = 4
    N: int = 48
    T: int = 2
    depth: float = 0.5
    out: str = "qgb-out"
    threads: int = 1
    seed: int = 0
    plots: bool = False

    def validate(self) -> None:
        if self.budget <= 0 or (self.time_budget is not None and self.time_budget <= 0):
            raise ValueError("budgets must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if not 1 <= self.m_star <= self.N:
            raise ValueError("need 1 <= m_star <= N")
        if self.T < 1 or not 0 <= self.depth <= 1:
            raise ValueError("need T >= 1 and 0 <= depth <= 1")


class InputError(Exception):
    pass


class TimeBudgetExceeded(Exception):
    pass


# ---------------------------------------------------------------------------
# input parsing


def load_json(arg: str):
    """A path to a JSON file, or inline JSON text."""
    p = Path(arg)
    if p.is_file():
        with p.open() as fh:
            return json.load(fh)
    try:
        return json.loads(arg)
    except json.JSONDecodeError:
        raise InputError(f"{arg!r} is neither a file nor valid JSON") from None


def load_space(arg: str):
    if not Path(arg).is_file() and not arg.lstrip().startswith("{"):
        return build_space({"kind": arg})
    return build_space(load_json(arg))


def parse_ray(space, obj, k: float):
    if isinstance(obj, str):
        obj = {"generator": obj}
    if "generator" in obj:
        name = obj["generator"]
        if name not in space.ray_names():
            space.ray_point(name, 1)  # raises for unknown names
        return qg.Ray(space, name, k, k)
    if "points" in obj:
        pts = tuple(space.decode(p) for p in obj["points"])
        if not pts:
            raise InputError("ray has no points")
        return qg.QuasiGeodesic(pts, k, k, obj.get("name", "points"))
    raise InputError("ray spec needs 'generator' or 'points'")


def load_rays(space, args: list[str], k: float) -> tuple[list, list]:
    specs = []
    for a in args:
        if Path(a).is_file() or a.lstrip()[:1] in "[{":
            obj = load_json(a)
            specs += obj if isinstance(obj, list) else [obj]
        else:
            specs.append({"generator": a})
    specs = [{"generator": s} if isinstance(s, str) else s for s in specs]
    return [parse_ray(space, s, k) for s in specs], specs


def load_kappa(arg: str):
    if arg in sl.GAUGES:
        return sl.KappaSpec(arg)
    if arg == "sawtooth":
        return sl.sawtooth
    return sl.KappaSpec.from_json(load_json(arg))


def int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# output


def _plain(x):
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, str) else k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [_plain(v) for v in x]
        return sorted(items, key=json.dumps) if isinstance(x, (set, frozenset)) else items
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return _plain(dataclasses.asdict(x))
    return x


class Writer:
    def __init__(self, out: str):
        self.root = Path(out)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(p)
        return p

    def json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(_plain(obj), indent=2) + "\n")
        return p

    def csv(self, name: str, header, rows) -> Path:
        p = self.path(name)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(header)
            for r in rows:
                w.writerow([json.dumps(_plain(v)) if isinstance(v, (list, tuple, dict)) else _plain(v) for v in r])
        return p

    def text(self, name: str, body: str) -> Path:
        p = self.path(name)
        p.write_text(body)
        return p


def _encode_seq(space, pts) -> list:
    return [space.encode(p) for p in pts]


# ---------------------------------------------------------------------------
# subcommands


def cmd_space_validate(a, cfg: RunConfig, w: Writer) -> int:
    """Exhaustive metric-axiom check over the ``--triples`` points nearest the basepoint."""
    s = load_space(a.space)
    n = a.triples
    if n < 1:
        raise InputError("--triples must be positive")
    r = 1.0
    pts = s.ball(s.basepoint, r)
    while len(pts) < n and r < 1e6:
        r *= 2
        pts = s.ball(s.basepoint, r)
    norms = s.dists(s.basepoint, s.batch(pts))
    pts = [pts[i] for i in sorted(range(len(pts)), key=lambda i: (norms[i], pts[i]))[:n]]
    v = check_metric(s, pts)
    w.json("space_validate.json", {
        "property": "metric axioms on a finite sample",
        "params": {"space": s.spec(), "points": len(pts)},
        "status": "pass" if v is None else "fail",
        "violation": v,
    })
    print(f"space validate: {len(pts)} points, " + ("metric axioms hold" if v is None else f"violation {v}"))
    return OK if v is None else FAIL


def cmd_fan(a, cfg: RunConfig, w: Writer) -> int:
    s = load_space(a.space)
    x0 = s.decode(load_json(a.x0)) if a.x0 else s.basepoint
    if a.len < 1:
        raise InputError("--len must be positive")
    res = qg.enumerate_fan(s, x0, a.q, a.Q, a.len, cfg.budget * 50)
    rows = [(i + 1, len(g), s.encode(g.points[-1]), _encode_seq(s, g.points)) for i, g in enumerate(res.sequences)]
    w.csv("fan.csv", ("id", "length", "endpoint", "sequence"), rows)
    w.json("fan.json", {
        "property": "fan of integral quasi-geodesics",
        "params": {"space": s.spec(), "x0": s.encode(x0), "q": a.q, "Q": a.Q, "len": a.len},
        "count": len(res.sequences), "truncated": res.truncated, "nodes": res.nodes,
    })
    print(f"fan: {len(res.sequences)} sequences" + (" (truncated)" if res.truncated else ""))
    return INCONCLUSIVE if res.truncated else OK


def cmd_cone(a, cfg: RunConfig, w: Writer) -> int:
    s = load_space(a.space)
    g, spec = load_rays(s, [a.ray], a.q)
    g = g[0]
    q = a.q
    Q = a.Q if a.Q is not None else q
    horizon = a.horizon or cfg.N
    res = qg.cone(s, g, q, Q, a.m, horizon, cfg.budget * 10)
    keys = sorted(res.members, key=lambda t: (t[1], t[0]))
    wid = {key: i + 1 for i, key in enumerate(keys)}
    w.csv("cone.csv", ("index", "point", "witness-id"), [(i, s.encode(p), wid[(p, i)]) for p, i in keys])
    w.json("cone.json", {
        "property": "cone of a quasi-geodesic at finite horizon",
        "params": {"space": s.spec(), "ray": spec[0], "q": q, "Q": Q, "m": a.m, "horizon": horizon,
                   "budget": cfg.budget * 10},
        "exhausted": res.exhausted, "nodes": res.nodes, "members": len(keys),
        "witnesses": {str(wid[key]): _encode_seq(s, res.witnesses[key]) for key in keys},
    })
    print(f"cone: {len(keys)} members, " + ("exhausted" if res.exhausted else "budget exhausted"))
    return OK if res.exhausted else INCONCLUSIVE


def cmd_boundary(a, cfg: RunConfig, w: Writer) -> int:
    s = load_space(a.space)
    rays, specs = load_rays(s, a.rays, cfg.k)
    if len(rays) < 1:
        raise InputError("need at least one ray")
    P = bd.boundary_partition(s, rays, cfg.k, cfg.m_star, cfg.N, cfg.T, cfg.depth, cfg.budget,
                              hausdorff=a.hausdorff, threads=cfg.threads)
    report = {"property": "finite-scale merge criterion", **P.to_json(), "space": s.spec(), "ray_specs": specs,
              "proofs": {f"{i},{j}": v.disjoint_proof for (i, j), v in sorted(P.details.items())
                         if v.disjoint_proof}}
    w.json("classes.json", report)
    w.text("merge.dot", P.to_dot())
    w.csv("verdicts.csv", ("ray_a", "ray_b", "verdict"),
          [(P.rays[i], P.rays[j], v) for (i, j), v in sorted(P.verdicts.items())])
    if cfg.plots:
        from . import plotting
        plotting.merge_matrix(P, w.path("merge_matrix.png"))
    print(f"boundary classes: {len(P.classes)} {P.classes}")
    if a.expect_classes is None:
        return OK
    got = len(P.classes)
    if got == a.expect_classes:
        return OK
    unproved = any(v == "not_merged_within_budget" and not P.details[key].disjoint_proof
                   for key, v in P.verdicts.items())
    # too many classes with unproved separations may just be a budget shortfall
    return INCONCLUSIVE if got > a.expect_classes and unproved else FAIL


def cmd_ends(a, cfg: RunConfig, w: Writer) -> int:
    s = load_space(a.space)
    radii = float_list(a.radii)
    rep = bd.coarse_ends(s, radii, a.R)
    rows = [(r, c) for r, c in zip(rep.radii, rep.counts)]
    w.csv("ends.csv", ("r", "component_count"), rows)
    w.json("ends.json", {"property": "coarse ends by ball complements",
                         "params": {"space": s.spec(), "radii": radii, "R": a.R},
                         "counts": rep.counts, "stabilized": rep.stabilized})
    if cfg.plots:
        from . import plotting
        plotting.ends_counts([(s.kind, r, c) for r, c in rows], w.path("ends.png"))
    print(f"ends: counts {rep.counts}" + ("" if rep.stabilized else " (not stabilized)"))
    if a.expect is not None:
        return OK if rep.counts[-1] == a.expect else FAIL
    return OK


def cmd_func(a, cfg: RunConfig, w: Writer) -> int:
    s = load_space(a.space)
    f = fn.FuncSpec.from_json(load_json(a.func))
    params = {"space": s.spec(), "func": f.to_json(), "mode": a.mode, "eps": a.eps}
    if a.mode == "so":
        radii = float_list(a.radii)
        rep = fn.test_slowly_oscillating(s, f, radii, a.M, a.eps)
        rows = [("shell", r, d, "", True) for r, d in zip(rep.radii, rep.sups)]
        verdict = "pass" if rep.passed else "fail"
        params.update(radii=radii, M=a.M)
    else:
        names = a.rays or s.ray_names()
        rays, specs = load_rays(s, names, cfg.k)
        ms = int_list(a.m)
        rep = fn.test_geom_slow_osc(s, f, rays, cfg.k, ms, a.eps, budget=cfg.budget)
        rows = [(r.ray, r.m, r.lower, r.upper, r.exhausted) for r in rep.rows]
        verdict = rep.verdict
        params.update(rays=specs, m_schedule=ms, k=cfg.k, budget=cfg.budget)
        if cfg.plots:
            from . import plotting
            plotting.gso_bounds(("ray", "m", "lower", "upper", "exhausted"), rows, w.path("gso.png"))
    w.csv("func.csv", ("ray", "m", "diameter", "upper", "exhausted"), rows)
    w.json("func.json", {"property": "slow oscillation" if a.mode == "so" else "cone-diameter oscillation",
                         "params": params, "verdict": verdict})
    print(f"func test ({a.mode}): {verdict}")
    return {"pass": OK, "fail": FAIL}.get(verdict, INCONCLUSIVE)


def cmd_track(a, cfg: RunConfig, w: Writer) -> int:
    s = load_space(a.space)
    (g, h), specs = load_rays(s, [a.ray_a, a.ray_b], cfg.k)
    kappa = load_kappa(a.kappa)
    v = sl.kappa_track(s, g, h, kappa, a.T, cfg.tol)
    rows = [(f"{lo}-{hi}", st, sn) for (lo, hi), st, sn in zip(v.windows, v.sup_t, v.sup_norm)]
    w.csv("track.csv", ("window", "sup_ratio_t", "sup_ratio_norm"), rows)
    w.json("track.json", {"property": "tracking up to a sublinear gauge",
                          "params": {"space": s.spec(), "rays": specs, "kappa": a.kappa, "T": a.T, "tol": cfg.tol},
                          "class_t": v.class_t, "class_norm": v.class_norm, "M": v.M, "C": v.C})
    if cfg.plots:
        from . import plotting
        plotting.track_sups([("pair", lo, hi, st, sn) for (lo, hi), st, sn in zip(v.windows, v.sup_t, v.sup_norm)],
                            w.path("track.png"))
    print(f"track: {v.class_norm} (norm-normalised), {v.class_t} (index-normalised), C={v.C:.4g}")
    if a.expect is not None:
        return OK if v.class_norm == a.expect else FAIL
    return OK


def cmd_quotient(a, cfg: RunConfig, w: Writer) -> int:
    part = load_json(a.partition)
    try:
        space_spec, ray_specs, classes = part["space"], part["ray_specs"], part["classes"]
    except (KeyError, TypeError):
        raise InputError("partition JSON needs 'space', 'ray_specs' and 'classes'") from None
    s = build_space(space_spec)
    rays = [parse_ray(s, r, cfg.k) for r in ray_specs]
    kappa = load_kappa(a.kappa)
    Qt = sl.sublinear_quotient(s, rays, classes, kappa, a.T, cfg.tol)
    w.json("quotient.json", {"property": "sublinear quotient of a boundary partition",
                             "params": {"space": s.spec(), "ray_specs": ray_specs, "kappa": a.kappa,
                                        "T": a.T, "tol": cfg.tol},
                             "input_classes": classes, "classes": Qt.classes,
                             "merges": [{"a": i, "b": j, "C": c} for i, j, c in Qt.merges]})
    print(f"quotient: {len(classes)} -> {len(Qt.classes)} classes {Qt.classes}")
    return OK


def _write_suite(res, cfg: RunConfig, w: Writer) -> None:
    d = res.name
    w.json(f"{d}/report.json", res.to_json())
    for name, table in res.tables.items():
        if name == "_partition":
            w.text(f"{d}/merge.dot", table.to_dot())
            continue
        header, rows = table
        w.csv(f"{d}/{name}.csv", header, rows)
    if not cfg.plots:
        return
    from . import plotting
    if "_partition" in res.tables:
        plotting.merge_matrix(res.tables["_partition"], w.path(f"{d}/merge_matrix.png"))
    if "ends" in res.tables:
        plotting.ends_counts(res.tables["ends"][1], w.path(f"{d}/ends.png"))
    if "tracking" in res.tables:
        plotting.track_sups(res.tables["tracking"][1], w.path(f"{d}/tracking.png"))
    if "gso" in res.tables:
        plotting.gso_bounds(*res.tables["gso"], w.path(f"{d}/gso.png"))
    if res.name == "sublinear":
        t = np.arange(1, 2 ** 14 + 1, dtype=float)
        plotting.majorant(sl.concave_majorant(t, sl.sawtooth(t)), w.path(f"{d}/majorant.png"), "sawtooth")


def cmd_suite(a, cfg: RunConfig, w: Writer) -> int:
    from .suites import SUITES, run_suite
    if a.list:
        for name in SUITES:
            print(name)
        return OK
    names = list(SUITES) if a.all else [a.name]
    if not a.all and a.name not in SUITES:
        raise InputError(f"unknown suite {a.name!r}; known: {', '.join(SUITES)}")
    codes = []
    summary = []
    for name in names:
        res = run_suite(name, threads=cfg.threads, seed=cfg.seed)
        _write_suite(res, cfg, w)
        for c in res.checks:
            print(f"{res.name:18s} {c.status.upper():13s} {c.name}")
        codes.append(res.status)
        summary.append({"suite": res.name, "status": res.status})
    if a.all:
        w.json("summary.json", summary)
    if "fail" in codes:
        return FAIL
    return INCONCLUSIVE if "inconclusive" in codes else OK


# ---------------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's unset flags from clobbering ones given before it
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file overriding the run defaults")
    g.add_argument("--out", help="output directory (default qgb-out)")
    g.add_argument("--threads", type=int, help="worker processes (capped by QGB_THREADS)")
    g.add_argument("--seed", type=int)
    g.add_argument("--plots", action="store_true", help="also render PNG figures")
    g.add_argument("--budget", type=int, help="expanded-node budget per search")
    g.add_argument("--time-budget", type=float, dest="time_budget", help="seconds before giving up (exit 3)")
    g.add_argument("--tol", type=float, help="tracking tolerance")
    g.add_argument("--k", type=float)
    g.add_argument("--m-star", type=int, dest="m_star")
    g.add_argument("--N", type=int)
    g.add_argument("--witnesses", type=int, dest="T_merge", help="witnesses required per direction (T)")
    g.add_argument("--depth", type=float, help="witness indices start at depth*N")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="qgb", description="Finite-scale quasi-geodesic boundary toolkit.",
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="space utilities").add_subparsers(dest="action", required=True)
    p = sp.add_parser("validate", parents=[common], help="check the metric axioms on a finite sample")
    p.add_argument("--space", required=True)
    p.add_argument("--triples", type=int, default=200, help="number of points nearest the basepoint")
    p.set_defaults(handler=cmd_space_validate)

    fp = sub.add_parser("fan", help="fan utilities").add_subparsers(dest="action", required=True)
    p = fp.add_parser("enumerate", parents=[common], help="list all quasi-geodesics of a given length")
    p.add_argument("--space", required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--Q", type=float, required=True)
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--x0", help="start point as JSON (default: basepoint)")
    p.set_defaults(handler=cmd_fan)

    p = sub.add_parser("cone", parents=[common], help="enumerate a truncated cone")
    p.add_argument("--space", required=True)
    p.add_argument("--ray", required=True, help="ray spec JSON, file or generator name")
    p.add_argument("--q", type=float, default=2)
    p.add_argument("--Q", type=float)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--horizon", type=int)
    p.set_defaults(handler=cmd_cone)

    bp = sub.add_parser("boundary", help="boundary utilities").add_subparsers(dest="action", required=True)
    p = bp.add_parser("classes", parents=[common], help="partition rays into boundary classes")
    p.add_argument("--space", required=True)
    p.add_argument("--rays", nargs="+", required=True, help="generator names, ray spec JSON or files")
    p.add_argument("--hausdorff", type=float, help="merge pairs within this Hausdorff distance outright")
    p.add_argument("--expect-classes", type=int, dest="expect_classes")
    p.set_defaults(handler=cmd_boundary)

    p = sub.add_parser("ends", parents=[common], help="count coarse ends")
    p.add_argument("--space", required=True)
    p.add_argument("--radii", required=True, help="comma-separated radii")
    p.add_argument("--R", type=float, required=True, help="outer radius")
    p.add_argument("--expect", type=int)
    p.set_defaults(handler=cmd_ends)

    up = sub.add_parser("func", help="function tests").add_subparsers(dest="action", required=True)
    p = up.add_parser("test", parents=[common], help="oscillation tests for a function")
    p.add_argument("--space", required=True)
    p.add_argument("--func", required=True)
    p.add_argument("--mode", choices=("so", "gso"), default="gso")
    p.add_argument("--rays", nargs="+")
    p.add_argument("--m", default="4,10,20", help="comma-separated m schedule (gso)")
    p.add_argument("--radii", default="4,8,16", help="comma-separated shell radii (so)")
    p.add_argument("--M", type=float, default=2)
    p.add_argument("--eps", type=float, default=0.1)
    p.set_defaults(handler=cmd_func)

    p = sub.add_parser("track", parents=[common], help="tracking of two rays up to a gauge")
    p.add_argument("--space", required=True)
    p.add_argument("--ray-a", required=True, dest="ray_a")
    p.add_argument("--ray-b", required=True, dest="ray_b")
    p.add_argument("--kappa", default="sqrt")
    p.add_argument("--T", type=int, default=4096, dest="T")
    p.add_argument("--expect", choices=("bounded", "growing"))
    p.set_defaults(handler=cmd_track)

    p = sub.add_parser("quotient", parents=[common], help="coarsen a partition by gauge tracking")
    p.add_argument("--partition", required=True, help="classes.json written by 'boundary classes'")
    p.add_argument("--kappa", default="sqrt")
    p.add_argument("--T", type=int, default=4096, dest="T")
    p.set_defaults(handler=cmd_quotient)

    p = sub.add_parser("suite", parents=[common], help="run named assertion batteries")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--name")
    g.add_argument("--all", action="store_true")
    g.add_argument("--list", action="store_true")
    p.set_defaults(handler=cmd_suite)
    return parser


def resolve_config(a) -> RunConfig:
    cfg = RunConfig()
    if getattr(a, "config", None):
        try:
            data = load_json(a.config)
        except InputError as exc:
            raise InputError(f"--config: {exc}") from None
        fields = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(data) - fields
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = dataclasses.replace(cfg, **data)
    names = ("out", "threads", "seed", "plots", "budget", "time_budget", "tol", "k", "m_star", "N", "depth")
    flags = {n: getattr(a, n) for n in names if hasattr(a, n)}
    if hasattr(a, "T_merge"):
        flags["T"] = a.T_merge
    cfg = dataclasses.replace(cfg, **flags)
    if "QGB_THREADS" in os.environ:
        cfg.threads = min(cfg.threads, max(1, int(os.environ["QGB_THREADS"])))
    cfg.validate()
    return cfg


def _on_alarm(signum, frame):
    raise TimeBudgetExceeded()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)   # exits 2 with usage on unknown flags
    try:
        cfg = resolve_config(a)
    except (InputError, ValueError, TypeError) as exc:
        print(f"qgb: {exc}", file=sys.stderr)
        return USAGE
    w = Writer(cfg.out)
    if cfg.time_budget is not None:
        signal.signal(signal.SIGALRM, _on_alarm)
        signal.setitimer(signal.ITIMER_REAL, cfg.time_budget)
    try:
        return a.handler(a, cfg, w)
    except TimeBudgetExceeded:
        print(f"qgb: time budget of {cfg.time_budget}s exhausted", file=sys.stderr)
        return INCONCLUSIVE
    except (InputError, SpaceError, ValueError, KeyError, OSError) as exc:
        print(f"qgb: {exc}", file=sys.stderr)
        return USAGE
    finally:
        if cfg.time_budget is not None:
            signal.setitimer(signal.ITIMER_REAL, 0)


if __name__ == "__main__":
    sys.exit(main())
