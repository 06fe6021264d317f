"""Matplotlib renderings of report tables (Agg backend, PNG files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

VERDICT_CODE = {"merged": 2, "hausdorff": 1, "not_merged_within_budget": 0}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def merge_matrix(partition, path: Path) -> Path:
    n = len(partition.rays)
    M = np.full((n, n), 2.0)
    for (i, j), v in partition.verdicts.items():
        M[i, j] = M[j, i] = VERDICT_CODE.get(v, 0)
    fig, ax = plt.subplots(figsize=(1 + 0.6 * n, 1 + 0.6 * n))
    ax.imshow(M, cmap="Greens", vmin=0, vmax=2)
    ax.set_xticks(range(n), partition.rays, rotation=60, ha="right")
    ax.set_yticks(range(n), partition.rays)
    ax.set_title("pairwise merge verdicts")
    return _save(fig, path)


def ends_counts(rows, path: Path) -> Path:
    """``rows`` are ``(space, r, count)``."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in sorted({r[0] for r in rows}):
        pts = [(r[1], r[2]) for r in rows if r[0] == name]
        ax.plot(*zip(*pts), marker="o", label=name)
    ax.set_xlabel("r")
    ax.set_ylabel("unbounded components")
    ax.legend()
    return _save(fig, path)


def track_sups(rows, path: Path) -> Path:
    """``rows`` are ``(label, lo, hi, sup_t, sup_norm)``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label in dict.fromkeys(r[0] for r in rows):
        sel = [r for r in rows if r[0] == label]
        ax.plot([r[2] for r in sel], [r[3] for r in sel], marker=".", label=f"{label} (t)")
        ax.plot([r[2] for r in sel], [r[4] for r in sel], ls="--", label=f"{label} (norm)")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("window end")
    ax.set_ylabel("sup distance / gauge")
    ax.legend(fontsize=7)
    return _save(fig, path)


def gso_bounds(header, rows, path: Path) -> Path:
    """Lower and certified upper cone diameters against ``m``, one curve per ray."""
    col = {h: i for i, h in enumerate(header)}
    fig, ax = plt.subplots(figsize=(6, 4))
    keyed: dict = {}
    for r in rows:
        name = r[col["ray"]] if "space" not in col else f"{r[col['space']]}:{r[col['ray']]}"
        keyed.setdefault(name, []).append((r[col["m"]], r[col["lower"]], r[col["upper"]]))
    for ray, pts in keyed.items():
        line, = ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{ray} lower")
        ups = [(p[0], p[2]) for p in pts if p[2] is not None]
        if ups:
            ax.plot(*zip(*ups), ls="--", color=line.get_color(), label=f"{ray} upper")
    ax.set_xlabel("m")
    ax.set_ylabel("diameter of f over the cone")
    ax.legend(fontsize=6)
    return _save(fig, path)


def majorant(result, path: Path, label: str = "gauge") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(result.ts, result.kappa, lw=0.8, label=label)
    ax.plot(result.ts, result.majorant, lw=1.2, label="concave majorant")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, path)
