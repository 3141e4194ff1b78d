"""Symbolic factorisation trees and a quasi-isometry decision procedure.

Leaves are opaque labels carrying an end class and an accessibility flag;
nodes record how two parts were amalgamated.  Nothing here touches graph
handles: the properties of the inputs (quasi-transitivity of factors and of
the adhesion families) are promises made by whoever writes the tree.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import NamespaceError, NotMultiEndedError, PreconditionError, SchemaError

INF = "inf"
END_CLASSES = (0, 1, 2, INF)
FINITE_MARKER = "<finite>"


def _rank(e) -> int:
    return 3 if e == INF else int(e)


@dataclass(frozen=True)
class Leaf:
    name: str
    ends: object = 1
    accessible: bool = True

    def __post_init__(self):
        if self.ends not in END_CLASSES or isinstance(self.ends, bool):
            raise SchemaError(f"leaf {self.name!r}: end class must be one of 0, 1, 2, \"inf\"")


@dataclass(frozen=True)
class Node:
    left: object
    right: object
    nontrivial: bool
    finite_adhesion: bool
    star: bool
    ends: object = None        # supplied end class, or None to derive
    accessible: bool | None = None

    def __post_init__(self):
        if self.ends is not None and (self.ends not in END_CLASSES or isinstance(self.ends, bool)):
            raise SchemaError("node end class must be one of 0, 1, 2, \"inf\"")


def leaves(ft):
    if isinstance(ft, Leaf):
        yield ft
    else:
        yield from leaves(ft.left)
        yield from leaves(ft.right)


def _nodes(ft):
    if isinstance(ft, Node):
        yield ft
        yield from _nodes(ft.left)
        yield from _nodes(ft.right)


def is_terminal(ft) -> bool:
    return all(_rank(lf.ends) <= 1 for lf in leaves(ft))


def infinite_type_set(ft) -> frozenset:
    return frozenset(lf.name for lf in leaves(ft) if _rank(lf.ends) >= 1)


def _proper(n: Node) -> bool:
    return n.nontrivial and n.finite_adhesion and not n.star


def end_class(ft):
    """Supplied or safely derived end class; ``None`` when it cannot be told.

    Derivation covers two cases only: every leaf finite with every node a
    proper amalgamation (nontrivial, finite adhesion, tree not a star), and a
    proper node with at least one infinite part, whose infinitely many copies
    are cut apart by finite adhesion sets.
    """
    if isinstance(ft, Leaf):
        return ft.ends
    if ft.ends is not None:
        return ft.ends
    if all(_rank(lf.ends) == 0 for lf in leaves(ft)) and all(_proper(n) for n in _nodes(ft)):
        return INF
    if _proper(ft):
        sides = [end_class(ft.left), end_class(ft.right)]
        if any(e is not None and _rank(e) >= 1 for e in sides):
            return INF
    return None


def is_accessible(ft) -> bool | None:
    return ft.accessible


def check_namespace(*trees) -> dict:
    """Label name -> (end class, accessible); conflicting attributes are an error."""
    seen: dict[str, tuple] = {}
    for ft in trees:
        for lf in leaves(ft):
            attrs = (lf.ends, lf.accessible)
            prev = seen.setdefault(lf.name, attrs)
            if prev != attrs:
                raise NamespaceError(f"label {lf.name!r} used with attributes {prev} and {attrs}")
    return seen


# -- normal forms ------------------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    kind: str            # "tree" | "free"
    case: int            # 1, 2 (free-like) or 3 (tree class)
    types: tuple         # sorted ((name, end class), ...)
    finite_marker: bool = False

    def to_json(self) -> dict:
        names = [n for n, _ in self.types] + ([FINITE_MARKER] if self.finite_marker else [])
        return {"class": "TreeClass" if self.kind == "tree" else "FreeLike",
                "case": self.case, "types": names,
                "ends": {n: e for n, e in self.types}}


def normal_form(ft) -> Classification:
    root = end_class(ft)
    if root is None:
        raise PreconditionError("root end class is neither supplied nor derivable")
    if root != INF:
        raise NotMultiEndedError(f"root has end class {root}, not infinitely many ends")
    ends = {lf.name: lf.ends for lf in leaves(ft) if _rank(lf.ends) >= 1}
    check_namespace(ft)
    types = tuple(sorted(ends.items()))
    if not types:
        return Classification("tree", 3, ())
    if len(types) == 1 and types[0][1] == 1:
        return Classification("free", 2, types, finite_marker=True)
    return Classification("free", 1, types)


def _pair(a, b):
    return Node(a, b, True, True, False)


def rebuild(cl: Classification):
    """A factorisation tree whose normal form is ``cl``."""
    finite = Leaf(FINITE_MARKER, 0)
    if cl.kind == "tree":
        return _pair(finite, Leaf(FINITE_MARKER, 0))
    parts = [Leaf(n, e) for n, e in cl.types]
    if cl.finite_marker:
        return _pair(parts[0], finite)
    if len(parts) == 1:
        return _pair(parts[0], parts[0])
    ft = parts[0]
    for p in parts[1:]:
        ft = _pair(ft, p)
    return ft


# -- canonical forms ---------------------------------------------------------------

def _attrs(ft) -> str:
    return f"ends={end_class(ft)},acc={is_accessible(ft)}"


@lru_cache(maxsize=65536)
def _canon(ft, root: bool) -> str:
    if isinstance(ft, Leaf):
        return f"L({ft.name})"
    a, b = sorted((_canon(ft.left, False), _canon(ft.right, False)))
    flags = f"{int(ft.nontrivial)}{int(ft.finite_adhesion)}{int(ft.star)}"
    # A proper amalgam of an infinite label with itself stands for that label
    # when it sits below the root.
    if (not root and a == b and a.startswith("L(") and _proper(ft)
            and _rank(_leaf_of(ft.left).ends) >= 1):
        return a
    return f"N[{flags}]({a},{b})"


def _leaf_of(ft):
    while isinstance(ft, Node):
        ft = ft.left
    return ft


def canonical_form(ft) -> str:
    return f"{_canon(ft, True)}|{_attrs(ft)}"


# -- decision ------------------------------------------------------------------------

EQUIVALENT, NOT_EQUIVALENT, UNKNOWN = "equivalent", "not_equivalent", "unknown"


@dataclass(frozen=True)
class Decision:
    verdict: str
    rule: str

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "rule": self.rule}


def decide_qi(g, h) -> Decision:
    """Rules, first match wins:

    1. identical canonical forms;
    2. both roots with infinitely many ends and equal infinite-type sets,
       or both two-ended, or both finite;
    3. both terminal with accessible roots of known end class: compare end
       classes and the sets of one-ended labels;
    4. otherwise unknown.  Differing type sets alone never separate.
    """
    check_namespace(g, h)
    if canonical_form(g) == canonical_form(h):
        return Decision(EQUIVALENT, "canonical-form")
    eg, eh = end_class(g), end_class(h)
    if eg == INF and eh == INF and infinite_type_set(g) == infinite_type_set(h):
        return Decision(EQUIVALENT, "infinitely-ended-type-set")
    if eg is not None and eg == eh and eg in (0, 2):
        return Decision(EQUIVALENT, "two-ended" if eg == 2 else "finite")
    if (is_terminal(g) and is_terminal(h) and is_accessible(g) is True
            and is_accessible(h) is True and eg is not None and eh is not None):
        if eg != eh:
            return Decision(NOT_EQUIVALENT, "terminal-ends")
        if infinite_type_set(g) != infinite_type_set(h):
            return Decision(NOT_EQUIVALENT, "terminal-one-ended-set")
        return Decision(EQUIVALENT, "terminal")
    return Decision(UNKNOWN, "undetermined")


# -- JSON ------------------------------------------------------------------------------

def tree_to_json(ft) -> dict:
    if isinstance(ft, Leaf):
        return {"leaf": {"name": ft.name, "ends": ft.ends, "accessible": ft.accessible}}
    doc = {"left": tree_to_json(ft.left), "right": tree_to_json(ft.right),
           "nontrivial": ft.nontrivial, "finite_adhesion": ft.finite_adhesion,
           "star": ft.star}
    if ft.ends is not None:
        doc["ends"] = ft.ends
    if ft.accessible is not None:
        doc["accessible"] = ft.accessible
    return {"node": doc}


def _flag(doc, key, where):
    if key not in doc:
        raise SchemaError(f"{where} is missing the explicit flag {key!r}")
    if not isinstance(doc[key], bool):
        raise SchemaError(f"{where}: {key!r} must be true or false")
    return doc[key]


def tree_from_json(doc):
    if not isinstance(doc, dict) or len(doc) != 1 or not ({"leaf", "node"} & doc.keys()):
        raise SchemaError("tree must be {\"leaf\": ...} or {\"node\": ...}")
    if "leaf" in doc:
        d = doc["leaf"]
        if not isinstance(d, dict) or not isinstance(d.get("name"), str):
            raise SchemaError("leaf needs a string name")
        if "ends" not in d:
            raise SchemaError(f"leaf {d['name']!r} needs an end class")
        return Leaf(d["name"], d["ends"], _flag(d, "accessible", f"leaf {d['name']!r}")
                    if "accessible" in d else True)
    d = doc["node"]
    if not isinstance(d, dict):
        raise SchemaError("node must be an object")
    flags = [_flag(d, k, "node") for k in ("nontrivial", "finite_adhesion", "star")]
    acc = d.get("accessible")
    if acc is not None and not isinstance(acc, bool):
        raise SchemaError("node: 'accessible' must be true or false")
    try:
        left, right = d["left"], d["right"]
    except KeyError:
        raise SchemaError("node needs left and right") from None
    return Node(tree_from_json(left), tree_from_json(right), *flags, d.get("ends"), acc)


def load_tree(doc):
    """Tree from a document carrying the schema tag and a ``tree`` entry."""
    from .io import check_schema

    check_schema(doc, "factorisation document")
    if "tree" not in doc:
        raise SchemaError("factorisation document needs a \"tree\" entry")
    return tree_from_json(doc["tree"])
