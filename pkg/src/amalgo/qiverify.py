"""Bounded-radius verification of quasi-isometry claims.

Distances are exact: source distances come from a geodesic window around the
source ball, target distances from a geodesic window around the images.
Statistics are exact rationals so reports are reproducible bit for bit.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graphcore import (
    DEFAULT_VERTEX_BUDGET,
    GraphHandle,
    Window,
    ball,
    geodesic_window,
)
from .qimaps import QiConstants, QiMap

DEFAULT_PAIR_BUDGET = 10**7
ROW_CHUNK = 256


@dataclass
class DistortionReport:
    radius: int
    pairs: int
    gamma_hat: Fraction
    c_hat: Fraction
    density_hat: int
    density_radius: int
    verdict: str
    witness: dict | None = None
    sampled: bool = False
    expansion: Fraction = Fraction(0)    # max dH / dG
    contraction: Fraction = Fraction(0)  # max dG / dH over dH > 0

    def to_json(self) -> dict:
        from .io import fraction_to_json

        doc = {"radius": self.radius, "pairs": self.pairs,
               "gamma_hat": fraction_to_json(self.gamma_hat),
               "c_hat": fraction_to_json(self.c_hat),
               "density_hat": self.density_hat, "density_radius": self.density_radius,
               "verdict": self.verdict, "sampled": self.sampled,
               "expansion": fraction_to_json(self.expansion),
               "contraction": fraction_to_json(self.contraction)}
        if self.witness is not None:
            doc["witness"] = self.witness
        return doc


@dataclass
class CheckResult:
    verdict: str  # "pass" | "fail"
    witness: dict | None
    reports: list

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> dict:
        doc = {"verdict": self.verdict, "reports": [r.to_json() for r in self.reports]}
        if self.witness is not None:
            doc["witness"] = self.witness
        return doc


def _row_positions(n: int, pair_budget: int) -> tuple[list[int], bool]:
    if n * (n - 1) // 2 <= pair_budget:
        return list(range(n)), False
    m = max(1, min(n, pair_budget // max(n, 1)))
    # Evenly spread over the (distance, key) order, so every distance layer is hit.
    return sorted({(i * n) // m for i in range(m)}), True


@dataclass
class _ChunkStats:
    pairs: int = 0
    up: tuple = (0, 1)        # (dH, dG) maximising dH / dG
    down: tuple = (0, 1)      # (dG, dH) maximising dG / dH over dH > 0
    c_up: int | None = None   # max q*dH - p*dG
    c_down: int | None = None  # max q*dG - p*dH
    witness: tuple | None = None  # (row position, column position)


def _ratio_max(num: np.ndarray, den: np.ndarray, best: tuple) -> tuple:
    if num.size == 0:
        return best
    ratio = num / den
    i = int(np.argmax(ratio))
    cand = (int(num[i]), int(den[i]))
    return cand if Fraction(*cand) > Fraction(*best) else best


def measure_distortion(f: QiMap, r: int, claim: QiConstants | None = None, *,
                       budget_vertices: int = DEFAULT_VERTEX_BUDGET,
                       budget_pairs: int = DEFAULT_PAIR_BUDGET,
                       jobs: int = 1) -> DistortionReport:
    """Distortion statistics of ``f`` on the source ball of radius ``r``."""
    claim = claim or f.claimed
    gamma, c, delta = claim.gamma, claim.c, claim.density
    src = f.source
    view = ball(src, src.origin, r, budget_vertices)
    verts = view.vertices
    n = len(verts)
    images = [f(v) for v in verts]
    swin = geodesic_window(src, verts, budget_vertices)
    twin = geodesic_window(f.target, images, budget_vertices)
    s_idx = np.array([swin.index[v] for v in verts])
    t_idx = np.array([twin.index[w] for w in images])
    rows, sampled = _row_positions(n, budget_pairs)
    rank = np.full(n, n, dtype=np.int64)
    rank[rows] = np.arange(len(rows))

    chunks = [rows[k:k + ROW_CHUNK] for k in range(0, len(rows), ROW_CHUNK)]

    def work(chunk):
        dG = swin.distances(s_idx[chunk])[:, s_idx]
        dH = twin.distances(t_idx[chunk])[:, t_idx]
        return _rows_stats(chunk, dG, dH, rank, gamma, c)

    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(work, chunks))
    else:
        results = [work(ch) for ch in chunks]

    total = _merge(results)
    p, q = gamma.numerator, gamma.denominator
    gamma_hat = max(Fraction(1), Fraction(*total.up), Fraction(*total.down))
    c_hat = Fraction(0)
    if total.c_up is not None:
        c_hat = max(c_hat, Fraction(total.c_up, q), Fraction(total.c_down, p))
    witness = None
    if total.witness is not None:
        u, v = verts[total.witness[0]], verts[total.witness[1]]
        witness = {"kind": "pair", "u": u, "v": v, "image_u": images[total.witness[0]],
                   "image_v": images[total.witness[1]],
                   "d_source": int(swin.distances([swin.index[u]])[0, swin.index[v]]),
                   "d_target": int(twin.distances([twin.index[images[total.witness[0]]]])
                                   [0, twin.index[images[total.witness[1]]]])}
    rho = math.floor(Fraction(r) / gamma - c - delta)
    density_hat = 0
    if rho >= 0:
        density_hat, uncovered = _density(f.target, f(src.origin), rho, delta, images,
                                          budget_vertices)
        if witness is None and uncovered is not None:
            witness = {"kind": "uncovered", "vertex": uncovered, "distance": density_hat}
    return DistortionReport(r, total.pairs, gamma_hat, c_hat, density_hat, rho,
                            "pass" if witness is None else "fail", witness, sampled,
                            Fraction(*total.up), Fraction(*total.down))


def _rows_stats(chunk, dG, dH, rank, gamma, c):
    p, q = gamma.numerator, gamma.denominator
    st = _ChunkStats()
    for a, i in enumerate(chunk):
        mask = rank > rank[i]
        mask[i] = False
        # Columns that are not sampled rows carry rank n and are always kept.
        g, h = dG[a][mask], dH[a][mask]
        st.pairs += int(g.size)
        if g.size == 0:
            continue
        st.up = _ratio_max(h, g, st.up)
        pos = h > 0
        st.down = _ratio_max(g[pos], h[pos], st.down)
        cu = int((q * h - p * g).max())
        cd = int((q * g - p * h).max())
        st.c_up = cu if st.c_up is None else max(st.c_up, cu)
        st.c_down = cd if st.c_down is None else max(st.c_down, cd)
        if st.witness is None:
            # Scaled by L = q * den(c): dH <= gamma dG + c and dG <= gamma (dH + c).
            L, A = q * c.denominator, p * c.denominator
            bad = (L * h > A * g + q * c.numerator) | (L * g > A * h + p * c.numerator)
            if bad.any():
                j = int(np.flatnonzero(mask)[int(np.argmax(bad))])
                st.witness = (i, j)
    return st


def _merge(results) -> _ChunkStats:
    out = _ChunkStats()
    for st in results:
        out.pairs += st.pairs
        if Fraction(*st.up) > Fraction(*out.up):
            out.up = st.up
        if Fraction(*st.down) > Fraction(*out.down):
            out.down = st.down
        for name in ("c_up", "c_down"):
            a, b = getattr(out, name), getattr(st, name)
            if b is not None:
                setattr(out, name, b if a is None else max(a, b))
        if out.witness is None:
            out.witness = st.witness
    return out


def _density(target: GraphHandle, center: str, rho: int, delta: Fraction, images,
             budget: int) -> tuple[int, str | None]:
    """Max distance from ``B(center, rho)`` to the image set, and the first
    vertex farther than ``delta``.

    The search runs in ``B(center, rho + floor(delta))``: any path of length at
    most ``delta`` from the inner ball stays there, so the comparison with
    ``delta`` is exact even though larger values are only upper bounds.
    """
    reach = rho + math.floor(delta)
    view = ball(target, center, reach, budget)
    win = Window.from_ball(target, view)
    sources = sorted({win.index[w] for w in images if w in win.index})
    dist = win.multi_source(sources)
    worst, uncovered = 0, None
    for v in view.vertices:
        if view.dist[v] > rho:
            break
        d = int(dist[win.index[v]])
        if d < 0:
            d = reach + 1
        if d > worst:
            worst = d
        if uncovered is None and d > delta:
            uncovered = v
    return worst, uncovered


def check_claim(f: QiMap, radii, claim: QiConstants | None = None, **kw) -> CheckResult:
    """Pass iff every radius satisfies both metric inequalities and density."""
    radii = list(radii)
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
        from .errors import PreconditionError

        raise PreconditionError("radii must be a nonempty increasing sequence")
    reports = []
    for r in radii:
        rep = measure_distortion(f, r, claim, **kw)
        reports.append(rep)
        if rep.verdict == "fail":
            return CheckResult("fail", dict(rep.witness, radius=r), reports)
    return CheckResult("pass", None, reports)


def bilipschitz_check(f: QiMap, radii, gamma=None, **kw) -> CheckResult:
    """``check_claim`` with additive constant 0 and no density slack.

    Together these force injectivity on the ball and surjectivity onto the
    interior target ball.
    """
    claim = QiConstants(f.claimed.gamma if gamma is None else gamma, 0, 0)
    return check_claim(f, radii, claim, **kw)


@dataclass(frozen=True)
class UnvaryingWitness:
    gamma: int
    description: str
    map: QiMap | None = None


def unvarying_probe(g: GraphHandle, u: str, v: str, r: int) -> UnvaryingWitness | None:
    """A 1-bilipschitz self-map sending ``u`` to ``v`` when a symmetry is known."""
    from .errors import PreconditionError
    from .graphcore import DoubleRay, Grid2D, SemiTree

    view = ball(g, g.origin, r)
    for x in (u, v):
        if x not in view:
            g.neighbors(x)
            raise PreconditionError(f"{x!r} is not within distance {r} of the origin")
    one = QiConstants(1, 0, 0)
    if isinstance(g, DoubleRay):
        s = int(v) - int(u)
        m = QiMap(g, g, lambda x: str(int(x) + s), one, f"translate({s})")
        return UnvaryingWitness(1, "translation", m)
    if isinstance(g, Grid2D):
        (a, b), (c, d) = g.coords(u), g.coords(v)

        def shift(x):
            x0, y0 = g.coords(x)
            return f"{x0 + c - a},{y0 + d - b}"

        return UnvaryingWitness(1, "translation", QiMap(g, g, shift, one, "translate"))
    if isinstance(g, SemiTree) and None not in g.p:
        same_side = SemiTree.side(g.address(u)) == SemiTree.side(g.address(v))
        if same_side or g.p[0] == g.p[1]:
            return UnvaryingWitness(1, "tree automorphism (vertex-transitive on each side)")
    return None
