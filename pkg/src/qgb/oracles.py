"""Slow reference implementations used to cross-check the search engine.

Nothing here touches the vectorised batches or the cached step balls of
:mod:`qgb.qgeo`; candidates come from breadth-first search over the unit
graph and every pair is re-checked in plain Python.
"""

from __future__ import annotations

from collections import deque

from .space import Point, Space


def bfs_ball(space: Space, x: Point, r: int) -> list:
    """Points at graph distance ``<= r`` from ``x`` (unit-edge spaces only)."""
    seen = {x: 0}
    todo = deque([x])
    while todo:
        p = todo.popleft()
        if seen[p] == r:
            continue
        for y in space.neighbors(p):
            if y not in seen:
                seen[y] = seen[p] + 1
                todo.append(y)
    return sorted(seen)


def _valid_pairs(space: Space, seq: tuple, q: float, Q: float) -> bool:
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, n):
            d = space._distance(seq[i], seq[j])
            gap = j - i
            if d < gap / q - Q - space.tol or d > q * gap + Q + space.tol:
                return False
    return True


def brute_force_fan(space: Space, x0: Point, q: float, Q: float, n: int) -> list:
    """Level-by-level brute force over graph balls.

    Level ``i+1`` tries every point within graph distance ``q + Q`` of the
    last point (the adjacent-index bound) after every sequence of level
    ``i``, and keeps those passing the full pairwise check.  Valid
    sequences have valid prefixes, so this is complete.  Only unit-edge
    spaces are supported, where graph distance is the metric.
    """
    step = int(q + Q + space.tol)
    near: dict = {}
    level = [(x0,)]
    for _ in range(1, n):
        nxt = []
        for seq in level:
            last = seq[-1]
            if last not in near:
                near[last] = bfs_ball(space, last, step)
            for y in near[last]:
                s = seq + (y,)
                if _valid_pairs(space, s, q, Q):
                    nxt.append(s)
        level = nxt
    return sorted(level)
