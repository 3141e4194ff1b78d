"""Tree amalgamations from finite presentations.

Tree nodes are addressed as in :class:`~amalgo.graphcore.SemiTree` with the
prefix ``@``.  The labeling ``c`` is canonical: the edge from a node to its
child carries the child's coordinate 1, and the parent's coordinate equals
the child label.  Hence at the root the first coordinates are ``1..p1``, and
at a non-root node on side ``i`` the parent edge holds ``i``-coordinate 1
while the children hold ``2..p_i``.

A vertex of the sum graph is ``"<tree token>:<factor token>"``; a vertex of
the contracted amalgam is the sum token of the least member of its
identification class.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import (
    AdhesionError,
    IdentificationBudgetError,
    PreconditionError,
    UnknownVertexError,
)
from .graphcore import (
    ExplicitGraph,
    GraphHandle,
    SemiTree,
    ball,
)

DEFAULT_IDENTIFICATION_BUDGET = 10**4
TREE_PREFIX = "@"


class ListAdhesion:
    """An explicit finite list of adhesion sets of one factor."""

    def __init__(self, graph: GraphHandle, sets):
        self.sets = tuple(tuple(str(x) for x in s) for s in sets)
        self.p = len(self.sets)
        if self.p == 0:
            raise AdhesionError("every factor needs at least one adhesion set")
        self._member: dict[str, tuple[int, ...]] = {}
        for k, s in enumerate(self.sets, start=1):
            if len(set(s)) != len(s):
                raise AdhesionError(f"adhesion set {k} repeats a vertex")
            for x in s:
                if not graph.has_vertex(x):
                    raise AdhesionError(f"adhesion vertex {x!r} is not in {graph.kind}")
                self._member[x] = self._member.get(x, ()) + (k,)

    def members(self, k: int) -> tuple[str, ...]:
        return self.sets[k - 1]

    def memberships(self, x: str) -> tuple[int, ...]:
        return self._member.get(x, ())

    def size(self) -> int:
        return len(self.sets[0])

    def to_json(self):
        return [list(s) for s in self.sets]


class SingletonAdhesion:
    """The partition of a pointed graph into singletons.

    Set ``k`` is the ``k``-th vertex in breadth-first order from the base
    vertex (ties broken by token order), so set 1 is the base vertex.  For
    infinite graphs ``p`` is None.
    """

    def __init__(self, graph: GraphHandle):
        if graph.base is None:
            raise PreconditionError("singleton adhesion needs a base vertex")
        self.graph = graph
        self.p = len(graph.vertices()) if graph.finite else None
        self._order = [graph.base]
        self._rank = {graph.base: 1}
        self._frontier = [graph.base]

    def _grow(self):
        if not self._frontier:
            raise UnknownVertexError("adhesion index beyond the graph")
        nxt = []
        for v in self._frontier:
            for w in self.graph.neighbors(v):
                if w not in self._rank and w not in nxt:
                    nxt.append(w)
        nxt.sort(key=self.graph.key)
        for w in nxt:
            self._order.append(w)
            self._rank[w] = len(self._order)
        self._frontier = nxt

    def members(self, k: int) -> tuple[str, ...]:
        while len(self._order) < k:
            self._grow()
        return (self._order[k - 1],)

    def memberships(self, x: str) -> tuple[int, ...]:
        while x not in self._rank:
            self.graph.neighbors(x)
            self._grow()
        return (self._rank[x],)

    def size(self) -> int:
        return 1

    def to_json(self):
        return "singletons"


@dataclass
class AmalgamSpec:
    """Presentation of a tree amalgamation ``factor1 *_T factor2``.

    ``adhesion1``/``adhesion2`` are lists of vertex lists, or the string
    ``"singletons"`` for the base-point partition.  ``bonding`` maps a
    label ``(k, l)`` to a dict ``S1_k -> S2_l``; missing labels pair the two
    sets in list order.
    """

    factor1: GraphHandle
    factor2: GraphHandle
    adhesion1: object
    adhesion2: object
    bonding: dict = field(default_factory=dict)
    identification_budget: int = DEFAULT_IDENTIFICATION_BUDGET
    name: str = "amalgam"

    def __post_init__(self):
        self.adh = (self._make_adhesion(self.factor1, self.adhesion1),
                    self._make_adhesion(self.factor2, self.adhesion2))
        if self.adh[0].size() != self.adh[1].size():
            raise AdhesionError(
                f"adhesion sets have cardinalities {self.adh[0].size()} and {self.adh[1].size()}")
        self.bonding = {tuple(k): {str(a): str(b) for a, b in dict(v).items()}
                        for k, v in dict(self.bonding).items()}
        for (k, l), phi in self.bonding.items():
            self._check_bijection(k, l, phi)
        self._inv = {kl: {b: a for a, b in phi.items()} for kl, phi in self.bonding.items()}
        self.tree = SemiTree(self.p1, self.p2, prefix=TREE_PREFIX, kind="amalgam-tree")
        self._sum = None
        self._contracted = None

    @staticmethod
    def _make_adhesion(graph, adhesion):
        if isinstance(adhesion, (ListAdhesion, SingletonAdhesion)):
            return adhesion
        if adhesion == "singletons":
            if graph.finite:
                return ListAdhesion(graph, [SingletonAdhesion(graph).members(k)
                                            for k in range(1, len(graph.vertices()) + 1)])
            return SingletonAdhesion(graph)
        return ListAdhesion(graph, adhesion)

    def _check_bijection(self, k, l, phi):
        if not (1 <= k and (self.p1 is None or k <= self.p1)):
            raise AdhesionError(f"bonding label {(k, l)} out of range")
        if not (1 <= l and (self.p2 is None or l <= self.p2)):
            raise AdhesionError(f"bonding label {(k, l)} out of range")
        src, dst = set(self.adh[0].members(k)), set(self.adh[1].members(l))
        if set(phi) != src or set(phi.values()) != dst or len(set(phi.values())) != len(phi):
            raise AdhesionError(f"bonding {(k, l)} is not a bijection S1_{k} -> S2_{l}")

    @property
    def p1(self):
        return self.adh[0].p

    @property
    def p2(self):
        return self.adh[1].p

    def factor(self, side: int) -> GraphHandle:
        return self.factor1 if side == 1 else self.factor2

    def phi(self, k: int, l: int, x: str) -> str:
        m = self.bonding.get((k, l))
        if m is not None:
            return m[x]
        a, b = self.adh[0].members(k), self.adh[1].members(l)
        return b[a.index(x)]

    def phi_inv(self, k: int, l: int, y: str) -> str:
        m = self._inv.get((k, l))
        if m is not None:
            return m[y]
        a, b = self.adh[0].members(k), self.adh[1].members(l)
        return a[b.index(y)]

    # -- tree ---------------------------------------------------------------

    @staticmethod
    def edge_label(parent: tuple, child_label: int) -> tuple[int, int]:
        return (child_label, 1) if SemiTree.side(parent) == 1 else (1, child_label)

    def tree_neighbors(self, t) -> list[tuple[str, tuple[int, int]]]:
        addr = self.tree.address(t) if isinstance(t, str) else tuple(t)
        out = []
        if addr:
            out.append((self.tree.token(addr[:-1]), self.edge_label(addr[:-1], addr[-1])))
        for c in self.tree.child_labels(addr):
            out.append((self.tree.token(addr + (c,)), self.edge_label(addr, c)))
        return out

    def incident_edge(self, addr: tuple, index: int):
        """The tree edge at ``addr`` whose own-side coordinate is ``index``.

        Returns ``(neighbour address, label)`` or None if the node lacks it.
        """
        if addr and index == 1:
            return addr[:-1], self.edge_label(addr[:-1], addr[-1])
        if not self.tree.label_ok(addr, index):
            return None
        return addr + (index,), self.edge_label(addr, index)

    def bridges(self, addr: tuple, x: str) -> list[tuple[tuple, str]]:
        """Sum-graph vertices joined to ``(addr, x)`` by a new edge."""
        side = SemiTree.side(addr)
        out = []
        for idx in self.adh[side - 1].memberships(x):
            hit = self.incident_edge(addr, idx)
            if hit is None:
                continue
            other, (k, l) = hit
            y = self.phi(k, l, x) if side == 1 else self.phi_inv(k, l, x)
            out.append((other, y))
        return out

    # -- tokens -------------------------------------------------------------

    def sum_token(self, addr: tuple, x: str) -> str:
        return self.tree.token(addr) + ":" + x

    def parse(self, v: str) -> tuple[tuple, str]:
        if not isinstance(v, str) or ":" not in v:
            raise UnknownVertexError(f"{v!r} is not a sum-graph token")
        t, x = v.split(":", 1)
        addr = self.tree.address(t)
        if not self.factor(SemiTree.side(addr)).has_vertex(x):
            raise UnknownVertexError(f"{x!r} is not a vertex of factor {SemiTree.side(addr)}")
        return addr, x

    def sum_key(self, addr: tuple, x: str):
        return (addr, self.factor(SemiTree.side(addr)).key(x))

    def identification_class(self, addr: tuple, x: str) -> list[tuple[tuple, str]]:
        """Closure of ``(addr, x)`` under bridges, sorted, least member first."""
        seen = {(addr, x)}
        q = deque([(addr, x)])
        while q:
            a, y = q.popleft()
            for b in self.bridges(a, y):
                if b not in seen:
                    seen.add(b)
                    if len(seen) > self.identification_budget:
                        raise IdentificationBudgetError(
                            f"identification class of {self.sum_token(addr, x)!r} exceeds "
                            f"{self.identification_budget} vertices")
                    q.append(b)
        return sorted(seen, key=lambda m: self.sum_key(*m))

    def describe(self) -> dict:
        from .io import spec_to_json

        return spec_to_json(self)


class SumGraph(GraphHandle):
    """``G1 + G2``: disjoint copies joined by one bridge per bonded pair."""

    kind = "sum"

    def __init__(self, spec: AmalgamSpec):
        self.spec = spec
        super().__init__(spec.sum_token((), spec.factor1.origin))
        self.finite = spec.factor1.finite and spec.factor2.finite and \
            spec.p1 == 1 and spec.p2 == 1

    def has_vertex(self, v):
        try:
            self.spec.parse(v)
        except UnknownVertexError:
            return False
        return True

    def key(self, v):
        return self.spec.sum_key(*self.spec.parse(v))

    def _neighbors(self, v):
        addr, x = self.spec.parse(v)
        g = self.spec.factor(SemiTree.side(addr))
        out = [self.spec.sum_token(addr, y) for y in g.neighbors(x)]
        out += [self.spec.sum_token(a, y) for a, y in self.spec.bridges(addr, x)]
        return out

    def is_bridge(self, u: str, v: str) -> bool:
        return u.split(":", 1)[0] != v.split(":", 1)[0]

    def describe(self):
        return {"sum": self.spec.describe()}


class ContractedGraph(GraphHandle):
    """``G1 * G2``: the sum graph with every bridge contracted."""

    kind = "contracted"

    def __init__(self, spec: AmalgamSpec):
        self.spec = spec
        self._rep: dict[tuple, str] = {}
        self._members: dict[str, list[tuple]] = {}
        super().__init__(self.psi(spec.sum_token((), spec.factor1.origin)))

    def _class(self, addr, x) -> str:
        rep = self._rep.get((addr, x))
        if rep is None:
            members = self.spec.identification_class(addr, x)
            rep = self.spec.sum_token(*members[0])
            self._members[rep] = members
            for m in members:
                self._rep[m] = rep
        return rep

    def psi(self, v: str) -> str:
        """The contraction map on sum-graph tokens."""
        return self._class(*self.spec.parse(v))

    def members(self, z: str) -> list[tuple]:
        if self.psi(z) != z:
            raise UnknownVertexError(f"{z!r} is not a class representative")
        return self._members[z]

    def has_vertex(self, z):
        try:
            return self.psi(z) == z
        except UnknownVertexError:
            return False

    def key(self, z):
        return self.spec.sum_key(*self.spec.parse(z))

    def _neighbors(self, z):
        out = set()
        for addr, x in self._members[z]:
            g = self.spec.factor(SemiTree.side(addr))
            for y in g.neighbors(x):
                w = self._class(addr, y)
                if w != z:
                    out.add(w)
        return out

    def describe(self):
        return {"contract": self.spec.describe()}


def tree_neighbors(spec: AmalgamSpec, t) -> list[tuple[str, tuple[int, int]]]:
    return spec.tree_neighbors(t)


def sum_graph(spec: AmalgamSpec) -> SumGraph:
    if spec._sum is None:
        spec._sum = SumGraph(spec)
    return spec._sum


def contract(spec: AmalgamSpec) -> ContractedGraph:
    if spec._contracted is None:
        spec._contracted = ContractedGraph(spec)
    return spec._contracted


def identification(spec: AmalgamSpec, x: str) -> tuple[int, int]:
    """Size and length (diameter) of the subtree hosting the class of ``x``."""
    G = contract(spec)
    addrs = sorted({a for a, _ in G.members(G.psi(x))})
    length = 0
    for i, a in enumerate(addrs):
        for b in addrs[i + 1:]:
            k = 0
            while k < min(len(a), len(b)) and a[k] == b[k]:
                k += 1
            length = max(length, len(a) + len(b) - 2 * k)
    return len(addrs), length


@dataclass(frozen=True)
class Triviality:
    status: str  # "trivial" | "nontrivial" | "unknown"
    radius: int | None = None
    reason: str = ""

    def __str__(self):
        return f"unknown({self.radius})" if self.status == "unknown" else self.status


def is_trivial(spec: AmalgamSpec, r: int = 3) -> Triviality:
    """Three-valued triviality test.

    ``trivial`` only via the sufficient condition (one factor has ``p_i = 1``
    and its single adhesion set is all of it).  ``nontrivial`` needs, for both
    sides, a certificate that no copy on that side maps bijectively: either
    the contracted amalgam has more vertices than a finite factor, or some
    class met within tree depth ``r`` avoids that side entirely.
    """
    for i in (1, 2):
        adh, g = spec.adh[i - 1], spec.factor(i)
        if adh.p == 1 and g.finite and isinstance(adh, ListAdhesion) and \
                set(adh.members(1)) == set(g.vertices()):
            return Triviality("trivial", reason=f"factor {i} is its only adhesion set")
    G = contract(spec)
    certified = []
    for i in (1, 2):
        g = spec.factor(i)
        if g.finite:
            view = ball(G, G.origin, r)
            if len(view) > len(g.vertices()):
                certified.append(i)
                continue
        other = 3 - i
        start = () if other == 1 else (1,)
        found = False
        for addr in _addresses(spec, start, r):
            for x in _sample_vertices(spec.factor(other), r):
                members = spec.identification_class(addr, x)
                if all(SemiTree.side(a) == other for a, _ in members):
                    found = True
                    break
            if found:
                break
        if found:
            certified.append(i)
    if certified == [1, 2]:
        return Triviality("nontrivial", r)
    return Triviality("unknown", r)


def _addresses(spec, start, depth):
    out = [start]
    frontier = [start]
    for _ in range(depth):
        nxt = []
        for a in frontier:
            p = spec.tree.degree_bound(a)
            if p is None:
                continue
            nxt += [a + (c,) for c in spec.tree.child_labels(a)]
        out += nxt
        frontier = nxt
    return out


def _sample_vertices(g, r):
    if g.finite:
        return g.vertices()
    return ball(g, g.origin, r).vertices


# -- structural rewrites ------------------------------------------------------

CENTER = (1,)


class ExtensionGraph(GraphHandle):
    """One factor-2 copy with its ``p2`` neighbouring factor-1 copies, contracted.

    The copy of factor 2 sits at tree node ``@.1``; its neighbour through
    adhesion index ``l`` is a factor-1 copy glued along ``S1_1``.  Tokens are
    ``c:<x>`` for central vertices and ``<l>:<y>`` for the remaining vertices
    of copy ``l``.  Every merged class contains a central vertex, so central
    tokens serve as representatives.
    """

    kind = "extension"

    def __init__(self, spec: AmalgamSpec):
        self.spec = spec
        self.glued = frozenset(spec.adh[0].members(1))
        super().__init__("c:" + spec.factor2.origin)
        self.finite = spec.factor2.finite

    def _split(self, v):
        if not isinstance(v, str) or ":" not in v:
            raise UnknownVertexError(f"{v!r} is not an extension token")
        grp, x = v.split(":", 1)
        if grp == "c":
            return 0, x
        try:
            l = int(grp)
        except ValueError:
            raise UnknownVertexError(f"{v!r} is not an extension token") from None
        if str(l) != grp or not (1 <= l <= self.spec.p2):
            raise UnknownVertexError(f"{v!r} is not an extension token")
        return l, x

    def has_vertex(self, v):
        try:
            l, x = self._split(v)
        except UnknownVertexError:
            return False
        if l == 0:
            return self.spec.factor2.has_vertex(x)
        return self.spec.factor1.has_vertex(x) and x not in self.glued

    def image(self, l: int, y: str) -> str:
        """Token of vertex ``y`` of factor-1 copy ``l``."""
        if y in self.glued:
            return "c:" + self.spec.phi(1, l, y)
        return f"{l}:{y}"

    def key(self, v):
        l, x = self._split(v)
        g = self.spec.factor2 if l == 0 else self.spec.factor1
        return (l, g.key(x))

    def _neighbors(self, v):
        l, x = self._split(v)
        g1 = self.spec.factor1
        if l:
            return [self.image(l, y) for y in g1.neighbors(x)]
        out = ["c:" + y for y in self.spec.factor2.neighbors(x)]
        for m in self.spec.adh[1].memberships(x):
            y = self.spec.phi_inv(1, m, x)
            out += [self.image(m, z) for z in g1.neighbors(y)]
        return [w for w in out if w != v]

    def vertices(self):
        if not self.finite:
            raise PreconditionError("extension of an infinite factor cannot be enumerated")
        out = ["c:" + x for x in self.spec.factor2.vertices()]
        for l in range(1, self.spec.p2 + 1):
            out += [f"{l}:{y}" for y in self.spec.factor1.vertices() if y not in self.glued]
        return tuple(out)

    def hull(self, vertices):
        return list(self.vertices()) if self.finite else None

    def describe(self):
        if not self.finite:
            return {"extension": self.spec.describe()}
        from .io import graph_to_json

        return graph_to_json(ExplicitGraph(
            [(u, w) for u in self.vertices() for w in self.neighbors(u) if u < w],
            self.vertices()))


def finite_extension(spec: AmalgamSpec) -> tuple[ExtensionGraph, AmalgamSpec]:
    """Finite extension of factor 2 by the finite factor 1, and the rewrite.

    The rewritten presentation has factors (extension, factor 2) over a
    ``(p2 (p1 - 1), p2)``-semiregular tree.  Its adhesion sets are the images
    of the outward sets ``S1_k`` (``k >= 2``) of every attached copy, ordered by
    ``(l, k)``, bonded to factor 2 by the original ``phi_{k, l'}``.
    """
    if not spec.factor1.finite:
        raise PreconditionError("finite_extension needs a finite first factor")
    if spec.p2 is None or spec.p1 is None:
        raise PreconditionError("finite_extension needs finitely many adhesion sets")
    if spec.p1 < 2:
        raise PreconditionError("finite_extension needs p1 >= 2")
    ext = ExtensionGraph(spec)
    sets, bonding = [], {}
    for l in range(1, spec.p2 + 1):
        for k in range(2, spec.p1 + 1):
            members = spec.adh[0].members(k)
            image = [ext.image(l, y) for y in members]
            if len(set(image)) != len(image):
                raise AdhesionError(f"adhesion set {k} of copy {l} collapses inside the extension")
            sets.append(image)
            kp = len(sets)
            for lp in range(1, spec.p2 + 1):
                bonding[(kp, lp)] = {img: spec.phi(k, lp, y) for img, y in zip(image, members)}
    g2_sets = [list(spec.adh[1].members(l)) for l in range(1, spec.p2 + 1)]
    rewritten = AmalgamSpec(ext, spec.factor2, sets, g2_sets, bonding,
                            identification_budget=spec.identification_budget,
                            name=spec.name + "/extension")
    return ext, rewritten


def extension_anchor(spec: AmalgamSpec, rewritten: AmalgamSpec) -> tuple[str, str]:
    """Corresponding contracted vertices of ``spec`` and its rewrite."""
    a = contract(spec).psi(spec.sum_token(CENTER, spec.factor2.origin))
    b = contract(rewritten).psi(rewritten.sum_token((), "c:" + spec.factor2.origin))
    return a, b


def base_point_amalgam(g1: GraphHandle, g2: GraphHandle, **kw) -> AmalgamSpec:
    """``G1 +_{v1,v2} G2``: singleton adhesion partitions, base sets first.

    With the canonical labeling the unique edge of ``T`` labeled ``(1, 1)``
    joins the root to its child 1, so the base edge is
    ``@:v1 -- @.1:v2``.
    """
    if g1.base is None or g2.base is None:
        raise PreconditionError("base_point_amalgam needs base vertices on both graphs")
    return AmalgamSpec(g1, g2, "singletons", "singletons", name="basepoint", **kw)


def base_edge(spec: AmalgamSpec) -> tuple[str, str]:
    return (spec.sum_token((), spec.factor1.base), spec.sum_token(CENTER, spec.factor2.base))


class WedgeGraph(GraphHandle):
    """Disjoint union of pointed parts plus edges from the first base to the others.

    Tokens are ``"<part index>|<part token>"``.
    """

    kind = "wedge"

    def __init__(self, parts):
        parts = list(parts)
        if len(parts) < 2:
            raise PreconditionError("a wedge needs at least two parts")
        for p in parts:
            if p.base is None:
                raise PreconditionError("every wedge part needs a base vertex")
        self.parts = parts
        super().__init__(f"0|{parts[0].base}", base=f"0|{parts[0].base}")
        self.finite = all(p.finite for p in parts)

    def _split(self, v):
        try:
            i, x = v.split("|", 1)
            i = int(i)
        except ValueError:
            raise UnknownVertexError(f"{v!r} is not a wedge token") from None
        if not (0 <= i < len(self.parts)) or str(i) + "|" + x != v:
            raise UnknownVertexError(f"{v!r} is not a wedge token")
        return i, x

    def has_vertex(self, v):
        try:
            i, x = self._split(v)
        except UnknownVertexError:
            return False
        return self.parts[i].has_vertex(x)

    def key(self, v):
        i, x = self._split(v)
        return (i, self.parts[i].key(x))

    def _neighbors(self, v):
        i, x = self._split(v)
        out = [f"{i}|{y}" for y in self.parts[i].neighbors(x)]
        if x == self.parts[i].base:
            if i == 0:
                out += [f"{j}|{p.base}" for j, p in enumerate(self.parts) if j]
            else:
                out.append(f"0|{self.parts[0].base}")
        return out

    def vertices(self):
        return tuple(f"{i}|{x}" for i, p in enumerate(self.parts) for x in p.vertices())

    def hull(self, vertices):
        return list(self.vertices()) if self.finite else None


def wedge(parts) -> WedgeGraph:
    return WedgeGraph(parts)
