"""Truncation estimates of the number of ends and of end separation.

Both are heuristics on finite windows.  A census counts the components of
``B(o, R)`` minus the open ball ``{d(o, v) < r}`` that reach the sphere of
radius ``R``; a count class is reported only when the census is stable
across three consecutive inner radii.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_flow

from .errors import NotMultiEndedError, PreconditionError
from .graphcore import DEFAULT_VERTEX_BUDGET, GraphHandle, ball

STABILITY_NOTE = "census stable over inner radii r, r+1, r+2 (truncation heuristic)"


@dataclass
class EndEstimate:
    r: int
    R: int
    census: int
    count_class: object  # 0 | 1 | 2 | ">=3" | "undecided"
    censuses: list = field(default_factory=list)

    @property
    def at_least_three(self) -> bool:
        return self.count_class == ">=3"

    def to_json(self) -> dict:
        return {"r": self.r, "R": self.R, "census": self.census, "class": self.count_class,
                "censuses": self.censuses, "note": STABILITY_NOTE}


def deep_components(g: GraphHandle, r: int, R: int, budget=DEFAULT_VERTEX_BUDGET,
                    view=None):
    """Components of ``B(o, R)`` minus the open ball ``{d < r}`` that meet
    the sphere of radius ``R``.

    Returns ``(view, components)``, each component a list of tokens in view order.
    """
    view = view or ball(g, g.origin, R, budget)
    outer = [v for v in view.vertices if view.dist[v] >= r]
    if not outer:
        return view, []
    index = {v: i for i, v in enumerate(outer)}
    rows, cols = [], []
    for v in outer:
        for w in view.adjacency[v]:
            j = index.get(w)
            if j is not None:
                rows.append(index[v])
                cols.append(j)
    n = len(outer)
    mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(mat, directed=False)
    groups: dict[int, list[str]] = {}
    for v in outer:
        groups.setdefault(int(labels[index[v]]), []).append(v)
    comps = [c for c in groups.values() if any(view.dist[v] == R for v in c)]
    comps.sort(key=lambda c: g.key(c[0]))
    return view, comps


def census(g: GraphHandle, r: int, R: int, budget=DEFAULT_VERTEX_BUDGET) -> int:
    return len(deep_components(g, r, R, budget)[1])


def _cap(n: int):
    return ">=3" if n >= 3 else n


def end_count_estimate(g: GraphHandle, r: int, R: int | None = None,
                       budget: int = DEFAULT_VERTEX_BUDGET) -> EndEstimate:
    """Count class from censuses at inner radii ``r, r+1, r+2`` and outer radius ``R``."""
    R = 3 * r if R is None else R
    if r < 1 or R < 3 * r or R < r + 3:
        raise PreconditionError("end estimates need r >= 1, R >= 3r and R >= r + 3")
    view = ball(g, g.origin, R, budget)
    counts = [len(deep_components(g, r + j, R, budget, view)[1]) for j in range(3)]
    if counts[0] == 0:
        cls = 0
    elif len({_cap(c) for c in counts}) == 1:
        cls = _cap(counts[0])
    else:
        cls = "undecided"
    return EndEstimate(r, R, counts[0], cls, counts)


@dataclass
class SeparationEstimate:
    r: int
    R: int
    value: int
    pair: tuple | None

    def to_json(self) -> dict:
        return {"r": self.r, "R": self.R, "separation": self.value, "estimate": True,
                "pair": list(self.pair) if self.pair else None}


def separation_profile(g: GraphHandle, r: int, R: int | None = None,
                       budget: int = DEFAULT_VERTEX_BUDGET) -> SeparationEstimate:
    """Max over pairs of deep components of the min vertex cut between their
    sphere attachments, inside ``B(o, R)`` (default ``R = 2r``).

    Vertices are split into in/out copies joined by unit arcs; a super source
    feeds one component's sphere vertices and a super sink drains the other's.
    """
    R = 2 * r if R is None else R
    if R <= r:
        raise PreconditionError("separation needs R > r")
    view, comps = deep_components(g, r, R, budget)
    if len(comps) < 2:
        raise NotMultiEndedError(f"only {len(comps)} deep component(s) at r={r}, R={R}")
    verts = view.vertices
    n = len(verts)
    index = {v: i for i, v in enumerate(verts)}
    big = n + 1
    rows, cols, caps = [], [], []
    for i, v in enumerate(verts):
        rows.append(2 * i)
        cols.append(2 * i + 1)
        caps.append(1)
        for w in view.adjacency[v]:
            rows.append(2 * i + 1)
            cols.append(2 * index[w])
            caps.append(big)
    src, snk = 2 * n, 2 * n + 1
    spheres = [[index[v] for v in c if view.dist[v] == R] for c in comps]
    best, pair = 0, None
    for a in range(len(comps)):
        for b in range(a + 1, len(comps)):
            rr = rows + [src] * len(spheres[a]) + [2 * j + 1 for j in spheres[b]]
            cc = cols + [2 * j for j in spheres[a]] + [snk] * len(spheres[b])
            kk = caps + [big] * (len(spheres[a]) + len(spheres[b]))
            mat = csr_matrix((np.array(kk, dtype=np.int32), (rr, cc)), shape=(2 * n + 2,) * 2)
            flow = int(maximum_flow(mat, src, snk).flow_value)
            if flow > best:
                best, pair = flow, (comps[a][0], comps[b][0])
    return SeparationEstimate(r, R, best, pair)
