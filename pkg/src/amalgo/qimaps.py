"""Explicit quasi-isometries between amalgams, trees and their factors.

Every constructor returns a :class:`QiMap` carrying the constants it claims.
Claims are exact rationals, derived from quantities observed up to a probe
radius (identification sizes, factor diameters, degrees).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import MismatchedEndpointError, PreconditionError
from .graphcore import GraphHandle

DEFAULT_PROBE_RADIUS = 8


@dataclass(frozen=True)
class QiConstants:
    gamma: Fraction
    c: Fraction
    density: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("gamma", "c", "density"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.gamma < 1 or self.c < 0 or self.density < 0:
            raise PreconditionError(f"invalid constants {self}")

    def to_json(self):
        from .io import fraction_to_json

        return {"gamma": fraction_to_json(self.gamma), "c": fraction_to_json(self.c),
                "density_c": fraction_to_json(self.density)}

    def __str__(self):
        return f"(gamma={self.gamma}, c={self.c}, density={self.density})"


@dataclass
class QiMap:
    source: GraphHandle
    target: GraphHandle
    func: Callable[[str], str]
    claimed: QiConstants
    tag: str
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self._memo: dict[str, str] = {}

    def __call__(self, v: str) -> str:
        try:
            return self._memo[v]
        except KeyError:
            pass
        self.source.neighbors(v)
        w = self.func(v)
        self._memo[v] = w
        return w

    def with_claim(self, claimed: QiConstants) -> "QiMap":
        return QiMap(self.source, self.target, self.func, claimed, self.tag, dict(self.info))

    def export(self, r: int, budget=None) -> str:
        """``src -> tgt`` lines for the source ball of radius ``r``."""
        from .graphcore import DEFAULT_VERTEX_BUDGET, ball

        view = ball(self.source, self.source.origin, r, budget or DEFAULT_VERTEX_BUDGET)
        k = self.claimed
        head = f"# {self.tag} gamma={k.gamma} c={k.c} density_c={k.density} radius={r}\n"
        return head + "".join(f"{v} -> {self(v)}\n" for v in view.vertices)


def identity(g: GraphHandle) -> QiMap:
    return QiMap(g, g, lambda v: v, QiConstants(1, 0, 0), "identity")


def compose(f: QiMap, g: QiMap) -> QiMap:
    """``g after f`` with the constants obtained by chaining both inequalities."""
    if f.target is not g.source:
        raise MismatchedEndpointError(f"cannot compose {f.tag} with {g.tag}: endpoints differ")
    a, b = f.claimed, g.claimed
    claimed = QiConstants(a.gamma * b.gamma, b.gamma * a.c + b.c,
                          b.gamma * a.density + b.c + b.density)
    return QiMap(f.source, g.target, lambda v: g(f(v)), claimed, f"{g.tag}.{f.tag}",
                 {"parts": [f.tag, g.tag]})


# -- helpers ------------------------------------------------------------------

def set_diameter(g: GraphHandle, vertices, budget=None) -> int:
    """Largest distance in ``g`` between two of ``vertices``."""
    from collections import deque

    from .graphcore import DEFAULT_VERTEX_BUDGET

    budget = budget or DEFAULT_VERTEX_BUDGET
    targets = set(vertices)
    worst = 0
    for x in sorted(targets, key=g.key):
        dist = {x: 0}
        q = deque([x])
        missing = len(targets) - 1
        while q and missing:
            v = q.popleft()
            for w in g.neighbors(v):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    if w in targets:
                        missing -= 1
                        worst = max(worst, dist[w])
                    q.append(w)
            if len(dist) > budget:
                from .errors import BudgetExceededError

                raise BudgetExceededError("adhesion diameter search exceeds the vertex budget")
    return worst


def graph_diameter(g: GraphHandle) -> int:
    if not g.finite:
        raise PreconditionError(f"{g.kind} is not finite")
    return set_diameter(g, g.vertices())


def adhesion_diameter(spec) -> int:
    """Max diameter of an adhesion set, each measured in its own factor."""
    worst = 0
    for side in (1, 2):
        adh = spec.adh[side - 1]
        if adh.size() <= 1:
            continue
        for k in range(1, adh.p + 1):
            worst = max(worst, set_diameter(spec.factor(side), adh.members(k)))
    return worst


# -- contraction and tree collapse ----------------------------------------------

def psi_map(spec, probe_radius: int = DEFAULT_PROBE_RADIUS) -> QiMap:
    """The contraction ``G1 + G2 -> G1 * G2``.

    Claimed ``gamma = c = s (D + 1)`` with ``s`` the largest identification
    size seen within ``probe_radius`` and ``D`` the adhesion diameter;
    surjective, so the density constant is 0.
    """
    from .amalgam import contract, identification, sum_graph
    from .graphcore import ball

    G = contract(spec)
    s = max(identification(spec, z)[0] for z in ball(G, G.origin, probe_radius).vertices)
    D = adhesion_diameter(spec)
    k = s * (D + 1)
    return QiMap(sum_graph(spec), G, G.psi, QiConstants(k, k, 0), "psi",
                 {"identification_size": s, "adhesion_diameter": D})


def tree_collapse_map(spec) -> QiMap:
    """Send every vertex of the copy at tree node ``t`` to ``t``.

    With ``Delta`` the larger factor diameter, a sum-graph path crossing ``m``
    bridges has length at most ``(Delta + 1) m + Delta``; the claim
    ``gamma = c = Delta + 2`` covers this.
    """
    from .amalgam import sum_graph

    if not (spec.factor1.finite and spec.factor2.finite):
        raise PreconditionError("tree_collapse_map needs two finite factors")
    delta = max(graph_diameter(spec.factor1), graph_diameter(spec.factor2))
    tree = spec.tree
    return QiMap(sum_graph(spec), tree, lambda v: v.split(":", 1)[0],
                 QiConstants(delta + 2, delta + 2, 0), "collapse", {"factor_diameter": delta})


# -- trees with infinitely many ends -> the 3-regular tree ----------------------

DEFAULT_ABSORB_DEPTH = 16


class PathSystem:
    """Disjoint paths ``P_v`` in the 3-regular tree, one per group of ``t``.

    ``t`` is rooted at its origin.  A non-root vertex of degree at most 2 joins
    its parent's group; every other vertex heads a group.  A group with ``d``
    outgoing edges receives a path with ``d - 2`` vertices, which has exactly
    ``d`` free edges.  The root group's path starts at the root of the target
    and every path continues downward along the least child label; the free
    edges of a path, in token order, lead to the paths of the child groups in
    token order.
    """

    def __init__(self, t: GraphHandle, absorb_depth: int = DEFAULT_ABSORB_DEPTH):
        from .graphcore import regtree

        self.t = t
        self.target = regtree(3)
        self.root = t.origin
        self.absorb_depth = absorb_depth
        self.parent = {self.root: None}
        self._frontier = [self.root]
        self._depth = 0
        self._head: dict[str, str] = {}
        self._groups: dict[str, tuple[list, list, int]] = {}  # head -> (members, exits, height)
        self._paths: dict[str, list[str]] = {}
        self._slots: dict[str, list[str]] = {}

    # rooted exploration
    def _expand(self):
        from .errors import NotATreeError

        nxt = []
        for x in self._frontier:
            for w in self.t.neighbors(x):
                if w == self.parent[x]:
                    continue
                if w in self.parent:
                    raise NotATreeError(f"cycle through {x!r} and {w!r}")
                self.parent[w] = x
                nxt.append(w)
        if not nxt:
            raise PreconditionError("tree exhausted: it has no ends")
        self._frontier = nxt
        self._depth += 1

    def children(self, x: str) -> list[str]:
        return [w for w in self.t.neighbors(x) if w != self.parent_of(x)]

    def parent_of(self, x: str):
        while x not in self.parent:
            self.t.neighbors(x)
            self._expand()
        return self.parent[x]

    def absorbed(self, x: str) -> bool:
        return x != self.root and self.t.degree(x) <= 2

    def head(self, x: str) -> str:
        h = self._head.get(x)
        if h is not None:
            return h
        y, steps = x, 0
        while self.absorbed(y):
            y = self.parent_of(y)
            steps += 1
            if steps > self.absorb_depth:
                raise PreconditionError(f"degree-2 chain above {x!r} exceeds the absorption depth")
        self._head[x] = y
        return y

    def group(self, h: str) -> tuple[list, list, int]:
        """Members, exits (heads of child groups, sorted) and height of group ``h``."""
        hit = self._groups.get(h)
        if hit is not None:
            return hit
        members, exits, height = [h], [], 0
        stack = [(h, 0)]
        while stack:
            x, d = stack.pop()
            for w in self.children(x):
                if self.absorbed(w):
                    if d + 1 > self.absorb_depth:
                        raise PreconditionError(f"group of {h!r} exceeds the absorption depth")
                    members.append(w)
                    self._head[w] = h
                    height = max(height, d + 1)
                    stack.append((w, d + 1))
                else:
                    exits.append(w)
        exits.sort(key=self.t.key)
        out = (members, exits, height)
        self._groups[h] = out
        return out

    def group_degree(self, h: str) -> int:
        return len(self.group(h)[1]) + (h != self.root)

    def path(self, h: str) -> list[str]:
        hit = self._paths.get(h)
        if hit is not None:
            return hit
        R = self.target
        deg = self.group_degree(h)
        if deg < 3:
            raise PreconditionError(f"group headed by {h!r} has only {deg} outgoing edges")
        if h == self.root:
            start, back = R.origin, None
        else:
            ph = self.head(self.parent_of(h))
            i = self.group(ph)[1].index(h)
            self.path(ph)
            back, start = self._slots[ph][i]
        addr = R.address(start)
        path, addrs = [start], [addr]
        for _ in range(deg - 3):
            addr = addr + (min(R.child_labels(addr)),)
            path.append(f"{path[-1]}.{addr[-1]}")
            addrs.append(addr)
        # Paths run downward, so every free edge leads to a child off the path.
        on_path = set(path)
        free = []
        for p, a in zip(path, addrs):
            for c in R.child_labels(a):
                q = f"{p}.{c}"
                if q not in on_path:
                    free.append((a + (c,), p, q))
        free.sort()
        slots = [(p, q) for _, p, q in free]
        for a, _, q in free:
            R._addr_cache[q] = a
        assert len(slots) == len(self.group(h)[1])
        self._paths[h] = path
        self._slots[h] = slots
        return path

    def __call__(self, v: str) -> str:
        return self.path(self.head(v))[0]


def cubic_tree_map(t: GraphHandle, probe_radius: int = DEFAULT_PROBE_RADIUS,
                   absorb_depth: int = DEFAULT_ABSORB_DEPTH, ends_radius: int = 3) -> QiMap:
    """Quasi-isometry from a tree with at least three ends onto the 3-regular tree.

    Each group is sent to the first vertex of its path.  With ``D`` the largest
    group degree and ``h`` the largest group height seen within
    ``probe_radius``, the claim is ``gamma = max(D - 2, 2h + 1)``, ``c = D`` and
    density ``D - 3``; when ``D = 3`` and no vertex is absorbed the map is an
    isomorphism and the claim is ``(1, 0, 0)``.
    """
    from .ends import end_count_estimate
    from .errors import TooFewEndsError
    from .graphcore import ball

    system = PathSystem(t, absorb_depth)
    view = ball(t, t.origin, probe_radius)
    for v in view.vertices:
        system(v)
    heads = {system.head(v) for v in view.vertices}
    D = max(system.group_degree(h) for h in heads)
    h = max(system.group(x)[2] for x in heads)
    est = end_count_estimate(t, ends_radius)
    if not est.at_least_three:
        raise TooFewEndsError(f"end probe reports {est.count_class}, need at least 3 ends")
    if D == 3 and h == 0:
        claim = QiConstants(1, 0, 0)
    else:
        claim = QiConstants(max(D - 2, 2 * h + 1), D, D - 3)
    return QiMap(t, system.target, system, claim, "cubic",
                 {"max_group_degree": D, "max_group_height": h})


# -- absorbing a finite factor ------------------------------------------------------

class AbsorbedGraph(GraphHandle):
    """The factor-2 copies of a sum graph, with each factor-1 copy replaced by a star.

    The star of a factor-1 copy joins its anchor (the least bridging target in
    a factor-2 copy) to its other bridging targets.  Tokens are sum tokens.
    """

    kind = "absorbed"

    def __init__(self, spec):
        from .amalgam import SemiTree

        self.spec = spec
        self._targets: dict[tuple, list] = {}
        self.side = SemiTree.side
        super().__init__(self.anchor(()))

    def targets(self, addr: tuple) -> list[tuple]:
        """Bridging targets of the factor-1 copy at ``addr``, least first."""
        hit = self._targets.get(addr)
        if hit is None:
            spec = self.spec
            found = {b for x in spec.factor1.vertices() for b in spec.bridges(addr, x)}
            if not found:
                raise PreconditionError(f"copy at {spec.tree.token(addr)} has no bridging edge")
            hit = sorted(found, key=lambda m: spec.sum_key(*m))
            self._targets[addr] = hit
        return hit

    def anchor(self, addr: tuple) -> str:
        return self.spec.sum_token(*self.targets(addr)[0])

    def has_vertex(self, v):
        from .errors import UnknownVertexError

        try:
            addr, _ = self.spec.parse(v)
        except UnknownVertexError:
            return False
        return self.side(addr) == 2

    def key(self, v):
        return self.spec.sum_key(*self.spec.parse(v))

    def _neighbors(self, v):
        spec = self.spec
        addr, y = spec.parse(v)
        out = [spec.sum_token(addr, z) for z in spec.factor2.neighbors(y)]
        for a, _ in spec.bridges(addr, y):
            tokens = [spec.sum_token(*m) for m in self.targets(a)]
            out += tokens[1:] if tokens[0] == v else tokens[:1]
        return [w for w in out if w != v]

    def describe(self):
        return {"absorbed": self.spec.describe()}


def absorb_finite_factor(spec) -> QiMap:
    """Fix factor-2 copies; send a factor-1 copy to its anchor.

    Every vertex moves at most ``D + 1`` (``D = diam(factor1)``).  A target
    edge inside a star expands to at most ``D + 2`` source edges, so
    ``gamma = c = D + 2`` holds; factor-2 vertices are fixed, so the image is
    everything and the density constant is 0.
    """
    from .amalgam import SemiTree, sum_graph

    if not spec.factor1.finite:
        raise PreconditionError("absorb_finite_factor needs a finite first factor")
    if spec.factor2.finite:
        raise PreconditionError("absorb_finite_factor needs an infinite second factor")
    D = graph_diameter(spec.factor1)
    target = AbsorbedGraph(spec)

    def f(v):
        addr, x = spec.parse(v)
        return v if SemiTree.side(addr) == 2 else target.anchor(addr)

    return QiMap(sum_graph(spec), target, f, QiConstants(D + 2, D + 2, 0), "absorb",
                 {"factor_diameter": D})


# -- adhesion normalisation ------------------------------------------------------------

@dataclass
class Normalisation:
    spec: object                 # the normalised presentation
    forward: QiMap               # contract(original) -> contract(normalised)
    factor_maps: tuple           # factor i -> normalised factor i
    stages: list                 # the three stage maps, in order
    specs: list                  # presentations after each stage


def _max_identification(spec, r):
    from .amalgam import contract, identification
    from .graphcore import ball

    G = contract(spec)
    return max(identification(spec, z)[0] for z in ball(G, G.origin, r).vertices)


def _class_map(src_spec, dst_spec, lift, claim, tag):
    """``psi(v) -> psi'(lift(least member of v))`` between contracted amalgams."""
    from .amalgam import contract

    A, B = contract(src_spec), contract(dst_spec)

    def f(z):
        addr, x = A.members(z)[0]
        return B.psi(dst_spec.sum_token(addr, lift(addr, x)))

    return QiMap(A, B, f, claim, tag)


def _factors_finite(spec):
    from .amalgam import ListAdhesion

    for i in (1, 2):
        if not spec.factor(i).finite or not isinstance(spec.adh[i - 1], ListAdhesion):
            raise PreconditionError("adhesion_normalize needs finite factors with listed adhesion sets")


def _stage_representatives(spec, probe):
    """Keep one bridge per tree edge: adhesion sets shrink to chosen representatives."""
    from .amalgam import AmalgamSpec

    p1, p2 = spec.p1, spec.p2
    if spec.adh[0].size() == 1:
        return spec, identity_class_map(spec, "representatives")
    g1 = spec.factor1
    r1 = [None] * (p1 + 1)
    r2 = [None] * (p2 + 1)
    r1[1] = min(spec.adh[0].members(1), key=g1.key)
    r2[1] = spec.phi(1, 1, r1[1])
    for k in range(2, p1 + 1):
        r1[k] = spec.phi_inv(k, 1, r2[1])
    for l in range(2, p2 + 1):
        r2[l] = spec.phi(1, l, r1[1])
    # Only labels (k, 1) and (1, l) occur, so these singletons are bonded consistently.
    bonding = {}
    for k in range(1, p1 + 1):
        bonding[(k, 1)] = {r1[k]: r2[1]}
    for l in range(1, p2 + 1):
        bonding[(1, l)] = {r1[1]: r2[l]}
    out = AmalgamSpec(spec.factor1, spec.factor2, [[x] for x in r1[1:]], [[y] for y in r2[1:]],
                      bonding, spec.identification_budget, spec.name + "/representatives")
    s = _max_identification(spec, probe)
    D = adhesion_diameter(spec)
    claim = QiConstants(4 * D * (s - 1) + 1, 0, 2 * D * (s - 1))
    return out, _class_map(spec, out, lambda a, x: x, claim, "representatives")


def identity_class_map(spec, tag):
    from .amalgam import contract

    G = contract(spec)
    return QiMap(G, G, lambda z: z, QiConstants(1, 0, 0), tag)


def split_vertices(g, sets):
    """Replace a vertex lying in ``n >= 2`` of ``sets`` by a clique of ``n`` copies.

    Returns the new graph, the new adhesion sets and the lift ``x -> first copy``.
    """
    from .graphcore import ExplicitGraph

    count: dict[str, int] = {}
    for s in sets:
        for x in s:
            count[x] = count.get(x, 0) + 1

    def copies(x):
        n = count.get(x, 0)
        return [x] if n <= 1 else [f"{x}#{j}" for j in range(1, n + 1)]

    edges = []
    for x in g.vertices():
        cx = copies(x)
        edges += [(a, b) for i, a in enumerate(cx) for b in cx[i + 1:]]
        for y in g.neighbors(x):
            if g.key(x) < g.key(y):
                edges += [(a, b) for a in copies(x) for b in copies(y)]
    verts = [c for x in g.vertices() for c in copies(x)]
    used: dict[str, int] = {}
    new_sets = []
    for s in sets:
        row = []
        for x in s:
            j = used.get(x, 0) + 1
            used[x] = j
            row.append(x if count[x] <= 1 else f"{x}#{j}")
        new_sets.append(row)
    order = {v: i for i, v in enumerate(verts)}
    h = ExplicitGraph(edges, verts, origin=copies(g.origin)[0], key=order.__getitem__)
    return h, new_sets, (lambda x: copies(x)[0]), any(n > 1 for n in count.values())


def _stage_split(spec, probe):
    """Split vertices lying in several adhesion sets (clique of copies)."""
    from .amalgam import AmalgamSpec

    h1, s1, lift1, hit1 = split_vertices(spec.factor1, spec.adh[0].sets)
    h2, s2, lift2, hit2 = split_vertices(spec.factor2, spec.adh[1].sets)
    if not (hit1 or hit2):
        return spec, identity_class_map(spec, "split"), (None, None)
    bonding = {}
    for (k, l), phi in spec.bonding.items():
        a = dict(zip(spec.adh[0].members(k), s1[k - 1]))
        b = dict(zip(spec.adh[1].members(l), s2[l - 1]))
        bonding[(k, l)] = {a[x]: b[y] for x, y in phi.items()}
    out = AmalgamSpec(h1, h2, s1, s2, bonding, spec.identification_budget, spec.name + "/split")
    s = _max_identification(spec, probe)
    lifts = (lift1, lift2)
    from .amalgam import SemiTree

    claim = QiConstants(2 * s + 1, 0, s)
    f = _class_map(spec, out, lambda a, x: lifts[SemiTree.side(a) - 1](x), claim, "split")
    return out, f, (lift1, lift2)


def adhesion_graph(g, sets):
    """Adhesion vertices of ``g``, adjacent when at distance at most ``2c + 1``.

    ``c`` is the largest distance from a vertex of ``g`` to an adhesion vertex.
    Returns the graph, ``c`` and the nearest-adhesion-vertex map.
    """
    from .errors import AdhesionError
    from .graphcore import ExplicitGraph, Window

    if not g.finite:
        raise PreconditionError("adhesion graphs need a finite factor")
    keep = sorted({x for s in sets for x in s}, key=g.key)
    win = Window(g, g.vertices())
    dist = win.distances([win.index[x] for x in keep])
    if (dist < 0).any():
        raise AdhesionError("some vertex is not connected to any adhesion vertex")
    nearest_d = dist.min(axis=0)
    c = int(nearest_d.max())
    nearest = {v: keep[int(np.argmax(dist[:, win.index[v]] == nearest_d[win.index[v]]))]
               for v in g.vertices()}
    edges = [(keep[i], keep[j]) for i in range(len(keep)) for j in range(i + 1, len(keep))
             if dist[i, win.index[keep[j]]] <= 2 * c + 1]
    rank = {v: i for i, v in enumerate(keep)}
    h = ExplicitGraph(edges, keep, origin=nearest[g.origin], key=rank.__getitem__)
    return h, c, nearest


def _stage_adhesion_only(spec):
    """Keep only adhesion vertices, joined at distance at most ``2c_i + 1``."""
    from .amalgam import AmalgamSpec, SemiTree

    h1, c1, n1 = adhesion_graph(spec.factor1, spec.adh[0].sets)
    h2, c2, n2 = adhesion_graph(spec.factor2, spec.adh[1].sets)
    out = AmalgamSpec(h1, h2, [list(s) for s in spec.adh[0].sets],
                      [list(s) for s in spec.adh[1].sets], spec.bonding,
                      spec.identification_budget, spec.name + "/adhesion-only")
    c = max(c1, c2)
    nearest = (n1, n2)
    f = _class_map(spec, out, lambda a, x: nearest[SemiTree.side(a) - 1][x],
                   QiConstants(2 * c + 1, 2 * c, 0), "adhesion-only")
    return out, f, ((h1, c1, n1), (h2, c2, n2))


def adhesion_normalize(spec, probe_radius: int = DEFAULT_PROBE_RADIUS) -> Normalisation:
    """Adhesion 1, pairwise distinct adhesion sets covering each factor.

    Three stages, each with its own map between contracted amalgams:
    representatives (one bridge per tree edge), vertex splitting, and
    restriction to adhesion vertices.  ``forward`` is their composite.
    """
    _factors_finite(spec)
    spec1, m1 = _stage_representatives(spec, probe_radius)
    spec2, m2, lifts = _stage_split(spec1, probe_radius)
    spec3, m3, parts = _stage_adhesion_only(spec2)
    forward = compose(compose(m1, m2), m3)
    factor_maps = []
    for i in (1, 2):
        g = spec.factor(i)
        lift = lifts[i - 1] or (lambda x: x)
        h, c, nearest = parts[i - 1]
        mid = spec2.factor(i)
        a = QiMap(g, mid, lift, QiConstants(1, 0, 1 if lifts[i - 1] else 0), "lift")
        b = QiMap(mid, h, nearest.__getitem__, QiConstants(2 * c + 1, 2 * c, 0), "nearest")
        factor_maps.append(compose(a, b))
    return Normalisation(spec3, forward, tuple(factor_maps), [m1, m2, m3], [spec1, spec2, spec3])


def normalised_clauses(spec) -> dict:
    """Exact presentation predicates: adhesion 1, distinct sets, sets cover."""
    out = {"adhesion_one": True, "distinct": True, "cover": True}
    for i in (1, 2):
        sets = [tuple(s) for s in spec.adh[i - 1].sets]
        out["adhesion_one"] &= all(len(s) == 1 for s in sets)
        out["distinct"] &= len({frozenset(s) for s in sets}) == len(sets)
        g = spec.factor(i)
        out["cover"] &= g.finite and {x for s in sets for x in s} == set(g.vertices())
    return out


# -- factorisations into finite graphs -> trees ---------------------------------------

class TreeOfTrees(GraphHandle):
    """Copies of the factor trees placed on the nodes of an amalgamation tree.

    Node ``u`` on side ``i`` carries a copy of ``inner[i]``; for every tree
    edge ``uv`` with label ``(k, l)`` one joining edge links the anchors
    ``f1(r)`` in the copy at the side-1 end and ``f2(phi_kl(r))`` at the
    other, where ``r`` is the least vertex of ``S1_k``.  Tokens are
    ``<tree token>/<inner token>``.
    """

    kind = "tree-of-trees"
    is_tree = True

    def __init__(self, spec, maps):
        from .amalgam import SemiTree

        if None in (spec.p1, spec.p2):
            raise PreconditionError("tree-of-trees needs finitely many adhesion sets")
        self.spec = spec
        self.maps = maps
        self._side = SemiTree.side
        first = {k: min(spec.adh[0].members(k), key=spec.factor1.key)
                 for k in range(1, spec.p1 + 1)}
        self._first = first
        super().__init__(f"{spec.tree.prefix}/{maps[0](spec.factor1.origin)}")

    def anchor(self, side: int, label) -> str:
        k, l = label
        r = self._first[k]
        return self.maps[0](r) if side == 1 else self.maps[1](self.spec.phi(k, l, r))

    def _split(self, v):
        from .errors import UnknownVertexError

        if not isinstance(v, str) or "/" not in v:
            raise UnknownVertexError(f"{v!r} is not a tree-of-trees token")
        t, w = v.split("/", 1)
        addr = self.spec.tree.address(t)
        return addr, w

    def has_vertex(self, v):
        from .errors import UnknownVertexError

        try:
            addr, w = self._split(v)
        except UnknownVertexError:
            return False
        return self.maps[self._side(addr) - 1].target.has_vertex(w)

    def key(self, v):
        addr, w = self._split(v)
        return (addr, self.maps[self._side(addr) - 1].target.key(w))

    def _neighbors(self, v):
        spec = self.spec
        addr, w = self._split(v)
        side = self._side(addr)
        inner = self.maps[side - 1].target
        tok = spec.tree.token(addr)
        out = [f"{tok}/{x}" for x in inner.neighbors(w)]
        for other, label in spec.tree_neighbors(addr):
            if self.anchor(side, label) == w:
                out.append(f"{other}/{self.anchor(3 - side, label)}")
        return out


def _leaf_map(g):
    from .graphcore import ExplicitGraph

    if not g.finite:
        raise PreconditionError("factorisation leaves must be finite graphs")
    point = ExplicitGraph([], ["*"], kind="point")
    return QiMap(g, point, lambda v: "*", QiConstants(1, graph_diameter(g), 0), "leaf")


def factorisation_tree_map(g, probe_radius: int = DEFAULT_PROBE_RADIUS) -> QiMap:
    """Map from an iterated amalgam of finite graphs to a tree.

    ``g`` is a finite graph (a leaf) or the contracted amalgam of a
    presentation whose factors are again such graphs.  With child constants
    ``(gamma, c, delta)`` (maxima over both factors), identification size
    ``s``, adhesion diameter ``D`` and ``B = 2 (gamma D + c) + 1``, the claim is

    * ``gamma' = max(2 (s - 1) B + gamma + c, gamma (1 + c))``,
    * ``c' = gamma c``,
    * ``delta' = delta + (s - 1) B``.

    A class spans at most ``s - 1`` bridges and crossing one costs at most
    ``B`` in the target; conversely a target geodesic is a concatenation of
    inner geodesics whose preimages cost ``gamma (m_j + c)`` each, joined by
    edges whose ends are identified in ``g``.
    """
    from .amalgam import ContractedGraph

    if not isinstance(g, ContractedGraph):
        return _leaf_map(g)
    spec = g.spec
    maps = [factorisation_tree_map(spec.factor(i), probe_radius) for i in (1, 2)]
    gamma = max(m.claimed.gamma for m in maps)
    c = max(m.claimed.c for m in maps)
    delta = max(m.claimed.density for m in maps)
    s = _max_identification(spec, probe_radius)
    D = adhesion_diameter(spec)
    B = 2 * (gamma * D + c) + 1
    claim = QiConstants(max(2 * (s - 1) * B + gamma + c, gamma * (1 + c)), gamma * c,
                        delta + (s - 1) * B)
    if all(m.tag == "leaf" for m in maps):
        # Every copy is a single point: the target is the amalgamation tree itself.
        tree = spec.tree
        f = (lambda z: tree.token(g.members(z)[0][0]))
    else:
        tree = TreeOfTrees(spec, maps)

        def f(z):
            addr, x = g.members(z)[0]
            side = 1 if len(addr) % 2 == 0 else 2
            return f"{spec.tree.token(addr)}/{maps[side - 1](x)}"

    return QiMap(g, tree, f, claim, "treefact",
                 {"identification_size": s, "adhesion_diameter": D})


@dataclass
class TreeFactorisation:
    tree_map: QiMap
    ends: object
    cubic: QiMap | None
    result: QiMap


def tree_factorisation_map(g, probe_radius: int = DEFAULT_PROBE_RADIUS,
                           ends_radius: int = 3) -> TreeFactorisation:
    """The tree map, followed by the cubic step when the tree has at least 3 ends."""
    from .ends import end_count_estimate

    tm = factorisation_tree_map(g, probe_radius)
    if tm.target.finite:
        from .ends import EndEstimate

        est = EndEstimate(ends_radius, 3 * ends_radius, 0, 0, [0, 0, 0])
    else:
        est = end_count_estimate(tm.target, ends_radius)
    if est.at_least_three:
        cubic = cubic_tree_map(tm.target, probe_radius, ends_radius=ends_radius)
        return TreeFactorisation(tm, est, cubic, compose(tm, cubic))
    return TreeFactorisation(tm, est, None, tm)
