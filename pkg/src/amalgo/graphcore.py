"""Lazy locally finite graphs, exact metric balls, and the built-in generators.

Every vertex is a string token.  A :class:`GraphHandle` only knows how to
list the neighbours of a token; balls and distance windows are computed on
demand by breadth-first search.
"""
from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .errors import (
    BudgetExceededError,
    ContainmentError,
    PreconditionError,
    UnknownVertexError,
)

DEFAULT_VERTEX_BUDGET = 10**6
ADDRESS_CACHE_LIMIT = 4 * 10**6

# Vertices u, v with d(o,u), d(o,v) <= a have every geodesic inside B(o, 2a):
# a vertex x on a geodesic satisfies min(d(u,x), d(x,v)) <= a.
CONTAINMENT = 2


class GraphHandle:
    """A connected, locally finite, simple graph given by a neighbour oracle.

    Subclasses implement :meth:`has_vertex` and :meth:`_neighbors`.  The
    public :meth:`neighbors` validates, sorts and memoises.
    """

    kind = "graph"
    finite = False
    is_tree = False

    def __init__(self, origin: str, base: str | None = None):
        self.origin = origin
        self.base = base
        self._nbr_cache: dict[str, tuple[str, ...]] = {}

    @property
    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"generator": self.kind, "params": self.params}

    def has_vertex(self, v: str) -> bool:
        raise NotImplementedError

    def _neighbors(self, v: str):
        raise NotImplementedError

    def neighbors(self, v: str) -> tuple[str, ...]:
        try:
            return self._nbr_cache[v]
        except KeyError:
            pass
        if not isinstance(v, str) or not self.has_vertex(v):
            raise UnknownVertexError(f"{v!r} is not a vertex of {self.kind}")
        nb = tuple(sorted(set(self._neighbors(v)), key=self.key))
        self._nbr_cache[v] = nb
        return nb

    def degree(self, v: str) -> int:
        return len(self.neighbors(v))

    def key(self, v: str):
        """Sort key for tokens; the order is total and run-independent."""
        return v

    def hull(self, vertices) -> list[str] | None:
        """A finite vertex set containing ``vertices`` in which distances
        between them are exact, or None when no such shortcut is known."""
        return None

    def pointed(self, base: str) -> "GraphHandle":
        if not self.has_vertex(base):
            raise UnknownVertexError(f"{base!r} is not a vertex of {self.kind}")
        g = copy.copy(self)
        g.base = base
        return g

    def __repr__(self):
        return f"<{type(self).__name__} {self.kind} {self.params}>"


class ExplicitGraph(GraphHandle):
    """A finite graph stored as adjacency sets."""

    finite = True

    def __init__(self, edges, vertices=(), origin=None, base=None, kind="explicit",
                 params=None, key=None):
        adj: dict[str, set[str]] = {}
        for v in vertices:
            adj.setdefault(str(v), set())
        for u, v in edges:
            u, v = str(u), str(v)
            if u == v:
                raise PreconditionError(f"loop at {u!r}: graphs must be simple")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        if not adj:
            raise PreconditionError("a graph needs at least one vertex")
        self._adj = adj
        self._key = key
        self._kind = kind
        self._params = dict(params or {})
        order = sorted(adj, key=self.key)
        super().__init__(origin if origin is not None else order[0], base)
        if self.origin not in adj:
            raise UnknownVertexError(f"origin {self.origin!r} not in graph")
        if base is not None and base not in adj:
            raise UnknownVertexError(f"base {base!r} not in graph")
        seen = {order[0]}
        todo = [order[0]]
        while todo:
            for w in adj[todo.pop()]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        if len(seen) != len(adj):
            raise PreconditionError(f"{kind} graph is not connected")
        self.is_tree = sum(len(s) for s in adj.values()) // 2 == len(adj) - 1

    @property
    def kind(self):
        return self._kind

    @property
    def params(self):
        return dict(self._params)

    def key(self, v):
        return self._key(v) if self._key else v

    def has_vertex(self, v):
        return v in self._adj

    def _neighbors(self, v):
        return self._adj[v]

    def vertices(self) -> tuple[str, ...]:
        return tuple(sorted(self._adj, key=self.key))

    def edges(self) -> list[tuple[str, str]]:
        out = []
        for u in self.vertices():
            for w in self.neighbors(u):
                if self.key(u) < self.key(w):
                    out.append((u, w))
        return out

    def hull(self, vertices):
        return list(self.vertices())

    def describe(self):
        if self._kind != "explicit":
            return super().describe()
        return {"edges": [list(e) for e in self.edges()], "vertices": list(self.vertices())}


def _int_key(v):
    return int(v)


def cycle(n: int) -> ExplicitGraph:
    if n < 3:
        raise PreconditionError("cycle(n) needs n >= 3")
    return ExplicitGraph([(i, (i + 1) % n) for i in range(n)], range(n), origin="0",
                         kind="cycle", params={"n": n}, key=_int_key)


def path(n: int) -> ExplicitGraph:
    if n < 1:
        raise PreconditionError("path(n) needs n >= 1")
    return ExplicitGraph([(i, i + 1) for i in range(n - 1)], range(n), origin="0",
                         kind="path", params={"n": n}, key=_int_key)


def complete(n: int) -> ExplicitGraph:
    if n < 1:
        raise PreconditionError("complete(n) needs n >= 1")
    return ExplicitGraph([(i, j) for i in range(n) for j in range(i + 1, n)], range(n),
                         origin="0", kind="complete", params={"n": n}, key=_int_key)


class DoubleRay(GraphHandle):
    """The integer line; tokens are decimal integers."""

    kind = "doubleray"
    is_tree = True

    def __init__(self, origin="0", base=None):
        super().__init__(origin, base)

    def has_vertex(self, v):
        try:
            return str(int(v)) == v
        except ValueError:
            return False

    def _neighbors(self, v):
        n = int(v)
        return (str(n - 1), str(n + 1))

    def key(self, v):
        return int(v)

    def hull(self, vertices):
        xs = [int(v) for v in vertices]
        return [str(i) for i in range(min(xs), max(xs) + 1)]


class Grid2D(GraphHandle):
    """The square lattice Z^2; tokens are ``"x,y"``."""

    kind = "grid2d"

    def __init__(self, origin="0,0", base=None):
        super().__init__(origin, base)

    @staticmethod
    def coords(v):
        x, y = v.split(",")
        return int(x), int(y)

    def has_vertex(self, v):
        try:
            x, y = self.coords(v)
        except ValueError:
            return False
        return v == f"{x},{y}"

    def _neighbors(self, v):
        x, y = self.coords(v)
        return (f"{x - 1},{y}", f"{x + 1},{y}", f"{x},{y - 1}", f"{x},{y + 1}")

    def key(self, v):
        return self.coords(v)


class SemiTree(GraphHandle):
    """The rooted ``(p1, p2)``-semiregular tree.

    A vertex is the sequence of child labels read from the root.  The root
    lies on side 1 and has children ``1..p1``; a non-root vertex on side
    ``i`` reaches its parent through label slot 1 and has children
    ``2..p_i``.  Tokens are ``prefix`` for the root and
    ``prefix.l1.l2...`` otherwise.
    """

    is_tree = True

    def __init__(self, p1: int | None, p2: int | None, prefix: str = "s",
                 kind: str = "semitree", origin: str | None = None, base=None):
        # None stands for countably infinite degree; such trees can be addressed
        # but not enumerated.
        if any(p is not None and p < 1 for p in (p1, p2)):
            raise PreconditionError("semiregular tree degrees must be positive")
        self.p = (p1, p2)
        self.prefix = prefix
        self._kind = kind
        self._addr_cache: dict[str, tuple[int, ...]] = {}
        super().__init__(origin if origin is not None else prefix, base)

    @property
    def kind(self):
        return self._kind

    @property
    def params(self):
        if self._kind == "regtree":
            return {"d": self.p[0]}
        return {"p1": self.p[0], "p2": self.p[1]}

    @staticmethod
    def side(addr) -> int:
        return 1 if len(addr) % 2 == 0 else 2

    def degree_bound(self, addr) -> int | None:
        return self.p[self.side(addr) - 1]

    def label_ok(self, addr, label: int) -> bool:
        p = self.degree_bound(addr)
        lo = 1 if not addr else 2
        return label >= lo and (p is None or label <= p)

    def child_labels(self, addr) -> range:
        p = self.degree_bound(addr)
        if p is None:
            raise PreconditionError("vertex of infinite degree cannot be enumerated")
        return range(1 if not addr else 2, p + 1)

    def token(self, addr) -> str:
        if not addr:
            return self.prefix
        return self.prefix + "." + ".".join(map(str, addr))

    def address(self, v: str) -> tuple[int, ...]:
        try:
            return self._addr_cache[v]
        except (KeyError, TypeError):
            pass
        addr = self._parse(v)
        if len(self._addr_cache) < ADDRESS_CACHE_LIMIT:
            self._addr_cache[v] = addr
        return addr

    def _parse(self, v: str) -> tuple[int, ...]:
        if v == self.prefix:
            return ()
        if not isinstance(v, str) or not v.startswith(self.prefix + "."):
            raise UnknownVertexError(f"{v!r} is not a vertex of {self.kind}")
        try:
            addr = tuple(int(x) for x in v[len(self.prefix) + 1:].split("."))
        except ValueError:
            raise UnknownVertexError(f"{v!r} is not a vertex of {self.kind}") from None
        if self.token(addr) != v:
            raise UnknownVertexError(f"{v!r} is not a canonical token")
        p1, p2 = self.p
        for j, a in enumerate(addr):
            hi = p1 if j % 2 == 0 else p2
            if a < (2 if j else 1) or (hi is not None and a > hi):
                raise UnknownVertexError(f"{v!r} is not a vertex of {self.kind}")
        return addr

    def has_vertex(self, v):
        try:
            self.address(v)
        except UnknownVertexError:
            return False
        return True

    def _neighbors(self, v):
        addr = self.address(v)
        out = []
        cache = self._addr_cache if len(self._addr_cache) < ADDRESS_CACHE_LIMIT else {}
        for c in self.child_labels(addr):
            w = f"{v}.{c}"
            cache[w] = addr + (c,)
            out.append(w)
        if addr:
            out.append(v.rsplit(".", 1)[0])
        return out

    def key(self, v):
        return self.address(v)

    def degree(self, v):
        p = self.degree_bound(self.address(v))
        if p is None:
            raise PreconditionError("vertex of infinite degree")
        return p

    def hull(self, vertices):
        # Ancestor closure: a subtree containing the root, hence convex.
        seen = set()
        for v in vertices:
            addr = self.address(v)
            for j in range(len(addr), -1, -1):
                t = self.token(addr[:j])
                if t in seen:
                    break
                seen.add(t)
        return sorted(seen, key=self.key)

    def tree_distance(self, u: str, v: str) -> int:
        a, b = self.address(u), self.address(v)
        k = 0
        while k < min(len(a), len(b)) and a[k] == b[k]:
            k += 1
        return len(a) + len(b) - 2 * k


def doubleray() -> DoubleRay:
    return DoubleRay()


def grid2d() -> Grid2D:
    return Grid2D()


def regtree(d: int) -> SemiTree:
    return SemiTree(d, d, prefix="r", kind="regtree")


def semitree(p1: int, p2: int) -> SemiTree:
    return SemiTree(p1, p2, prefix="s", kind="semitree")


GENERATORS = {
    "doubleray": doubleray,
    "grid2d": grid2d,
    "cycle": cycle,
    "path": path,
    "complete": complete,
    "regtree": regtree,
    "semitree": semitree,
}


def neighbors(g: GraphHandle, v: str) -> tuple[str, ...]:
    return g.neighbors(v)


@dataclass
class BallView:
    center: str
    radius: int
    vertices: list[str]
    dist: dict[str, int]
    adjacency: dict[str, tuple[str, ...]]

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, v):
        return v in self.dist

    def sphere(self, k: int) -> list[str]:
        return [v for v in self.vertices if self.dist[v] == k]

    def edges(self) -> list[tuple[str, str]]:
        return sorted({(u, w) if u < w else (w, u)
                       for u in self.vertices for w in self.adjacency[u]})

    def to_edgelist(self) -> str:
        return "".join(f"{u} {w}\n" for u, w in self.edges())

    def to_dot(self, name: str = "ball") -> str:
        lines = [f"graph {name} {{"]
        for v in self.vertices:
            lines.append(f'  "{v}" [dist={self.dist[v]}];')
        for u, w in self.edges():
            lines.append(f'  "{u}" -- "{w}";')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"center": self.center, "radius": self.radius,
                "vertices": [[v, self.dist[v]] for v in self.vertices],
                "edges": [list(e) for e in self.edges()]}


def ball(g: GraphHandle, x0: str | None = None, r: int = 0,
         budget: int = DEFAULT_VERTEX_BUDGET) -> BallView:
    """Vertices within distance ``r`` of ``x0`` with their induced adjacency."""
    if r < 0:
        raise PreconditionError("radius must be nonnegative")
    x0 = g.origin if x0 is None else x0
    g.neighbors(x0)
    dist = {x0: 0}
    frontier = [x0]
    for k in range(1, r + 1):
        nxt = []
        for v in frontier:
            for w in g.neighbors(v):
                if w not in dist:
                    dist[w] = k
                    nxt.append(w)
        if len(dist) > budget:
            raise BudgetExceededError(
                f"ball of radius {k} about {x0!r} exceeds {budget} vertices")
        if not nxt:
            break
        frontier = nxt
    order = sorted(dist, key=lambda v: (dist[v], g.key(v)))
    adjacency = {v: tuple(w for w in g.neighbors(v) if w in dist) for v in order}
    return BallView(x0, r, order, dist, adjacency)


def radius_covering(g: GraphHandle, center: str, targets, budget=DEFAULT_VERTEX_BUDGET) -> int:
    """Smallest R with every target inside B(center, R)."""
    missing = set(targets)
    missing.discard(center)
    dist = {center: 0}
    frontier = [center]
    k = 0
    while missing:
        k += 1
        nxt = []
        for v in frontier:
            for w in g.neighbors(v):
                if w not in dist:
                    dist[w] = k
                    nxt.append(w)
                    missing.discard(w)
        if len(dist) > budget:
            raise BudgetExceededError(f"search for {len(missing)} targets exceeds {budget} vertices")
        if not nxt:
            raise ContainmentError(f"targets unreachable from {center!r}")
        frontier = nxt
    return k


class Window:
    """A finite vertex set of a graph indexed for fast batched BFS."""

    def __init__(self, g: GraphHandle, vertices, adjacency=None):
        self.graph = g
        self.vertices = list(vertices)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        rows, cols = [], []
        for i, v in enumerate(self.vertices):
            nbrs = adjacency[v] if adjacency is not None else g.neighbors(v)
            for w in nbrs:
                j = self.index.get(w)
                if j is not None:
                    rows.append(i)
                    cols.append(j)
        n = len(self.vertices)
        self.csr = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))

    @classmethod
    def from_ball(cls, g: GraphHandle, view: BallView) -> "Window":
        return cls(g, view.vertices, view.adjacency)

    def __len__(self):
        return len(self.vertices)

    def distances(self, sources) -> np.ndarray:
        """Rows of BFS distances from window indices; -1 marks unreachable."""
        sources = list(sources)
        out = np.full((len(sources), len(self)), -1, dtype=np.int64)
        for row, s in enumerate(sources):
            order, pred = breadth_first_order(self.csr, int(s), directed=True,
                                              return_predecessors=True)
            # BFS order is sorted by distance and predecessor positions are
            # non-decreasing, so each level is a contiguous block found by bisection.
            pos = np.empty(len(self), dtype=np.int64)
            pos[order] = np.arange(len(order))
            ppos = np.empty(len(order), dtype=np.int64)
            ppos[0] = -1
            ppos[1:] = pos[pred[order[1:]]]
            dist = np.empty(len(order), dtype=np.int64)
            lo, hi, k = 0, 1, 0
            while lo < len(order):
                dist[lo:hi] = k
                lo, hi, k = hi, int(np.searchsorted(ppos, hi, side="left")), k + 1
            out[row, order] = dist
        return out

    def multi_source(self, sources) -> np.ndarray:
        """Distance from every window vertex to the nearest source."""
        n = len(self)
        dist = np.full(n, -1, dtype=np.int64)
        q = deque()
        for s in sources:
            if dist[s] < 0:
                dist[s] = 0
                q.append(s)
        indptr, indices = self.csr.indptr, self.csr.indices
        while q:
            i = q.popleft()
            for j in indices[indptr[i]:indptr[i + 1]]:
                if dist[j] < 0:
                    dist[j] = dist[i] + 1
                    q.append(j)
        return dist


def geodesic_window(g: GraphHandle, vertices, budget=DEFAULT_VERTEX_BUDGET,
                    extra_radius: int = 0) -> Window:
    """A window in which the distance between any two of ``vertices`` is exact.

    Trees and finite graphs use their convex hull.  Otherwise the window is
    ``B(origin, CONTAINMENT * R)`` with ``R`` the covering radius, enlarged to
    at least ``extra_radius``.
    """
    vertices = list(vertices)
    hull = g.hull(vertices)
    if hull is not None:
        if extra_radius > 0:
            hull = g.hull(list(hull) + ball(g, g.origin, extra_radius, budget).vertices)
        if len(hull) > budget:
            raise BudgetExceededError(f"hull of {len(vertices)} vertices exceeds {budget}")
        return Window(g, hull)
    R = radius_covering(g, g.origin, vertices, budget)
    view = ball(g, g.origin, max(CONTAINMENT * R, extra_radius), budget)
    return Window.from_ball(g, view)


_WINDOW_CACHE: dict = {}


def _distance_window(g: GraphHandle, a: int, budget: int) -> tuple[BallView, BallView]:
    key = (id(g), g.origin, a)
    hit = _WINDOW_CACHE.get(key)
    if hit is not None and hit[0] is g:
        return hit[1], hit[2]
    inner = ball(g, g.origin, a, budget)
    outer = ball(g, g.origin, CONTAINMENT * a, budget)
    if len(_WINDOW_CACHE) > 32:
        _WINDOW_CACHE.clear()
    _WINDOW_CACHE[key] = (g, inner, outer)
    return inner, outer


def exact_distance(g: GraphHandle, u: str, v: str, a: int,
                   budget: int = DEFAULT_VERTEX_BUDGET) -> int:
    """d_G(u, v) for u, v in B(origin, a), by BFS inside B(origin, 2a)."""
    inner, outer = _distance_window(g, a, budget)
    for x in (u, v):
        if x not in inner:
            g.neighbors(x)
            raise PreconditionError(f"{x!r} is not within distance {a} of the origin")
    if u == v:
        return 0
    seen = {u: 0}
    q = deque([u])
    while q:
        x = q.popleft()
        for w in outer.adjacency[x]:
            if w not in seen:
                seen[w] = seen[x] + 1
                if w == v:
                    return seen[w]
                q.append(w)
    raise ContainmentError(f"no path from {u!r} to {v!r} inside B(origin, {CONTAINMENT * a})")


def to_networkx(view: BallView):
    import networkx as nx

    G = nx.Graph()
    G.add_nodes_from(view.vertices)
    G.add_edges_from(view.edges())
    return G
