"""JSON documents for graphs, amalgam presentations and reports."""
from __future__ import annotations

import json
from fractions import Fraction

from .errors import AmalgoError, SchemaError
from .graphcore import GENERATORS, ExplicitGraph, GraphHandle

SCHEMA = "amalgo/1"


def dumps(doc) -> str:
    """Canonical serialisation: sorted keys, fixed separators, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, default=_default) + "\n"


def _default(o):
    if isinstance(o, Fraction):
        return fraction_to_json(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def fraction_to_json(q: Fraction):
    q = Fraction(q)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def fraction_from_json(v) -> Fraction:
    try:
        return Fraction(v)
    except (TypeError, ValueError, ZeroDivisionError):
        raise SchemaError(f"{v!r} is not a rational number") from None


def check_schema(doc, what="document"):
    if not isinstance(doc, dict):
        raise SchemaError(f"{what} must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise SchemaError(f"{what} must carry \"schema\": \"{SCHEMA}\"")


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e.msg} at line {e.lineno}") from None


# -- graphs -------------------------------------------------------------------

def graph_to_json(g: GraphHandle) -> dict:
    doc = dict(g.describe())
    if g.base is not None:
        doc["base"] = g.base
    return doc


def graph_from_json(doc) -> GraphHandle:
    if not isinstance(doc, dict):
        raise SchemaError("graph must be an object")
    if "graph" in doc and isinstance(doc["graph"], dict):
        doc = doc["graph"]
    if "factors" in doc:
        # A nested presentation stands for its contracted amalgam.
        from .amalgam import contract

        return contract(spec_from_json(doc))
    if "generator" in doc:
        name = doc["generator"]
        gen = GENERATORS.get(name)
        if gen is None:
            raise SchemaError(f"unknown generator {name!r}")
        params = doc.get("params") or {}
        if not isinstance(params, dict) or not all(isinstance(v, int) for v in params.values()):
            raise SchemaError(f"parameters of {name} must be an object of integers")
        try:
            g = gen(**params)
        except TypeError:
            raise SchemaError(f"bad parameters {sorted(params)} for {name}") from None
    elif "edges" in doc:
        edges = doc["edges"]
        if not isinstance(edges, list) or not all(
                isinstance(e, list) and len(e) == 2 for e in edges):
            raise SchemaError("edges must be a list of token pairs")
        g = ExplicitGraph([(str(a), str(b)) for a, b in edges],
                          [str(v) for v in doc.get("vertices", [])])
    else:
        raise SchemaError("graph needs either a generator or an edge list")
    if doc.get("origin") is not None:
        g.origin = str(doc["origin"])
        g.neighbors(g.origin)
    if doc.get("base") is not None:
        g = g.pointed(str(doc["base"]))
    return g


# -- amalgam presentations ------------------------------------------------------

def spec_to_json(spec) -> dict:
    bonding = {f"{k},{l}": sorted([a, b] for a, b in phi.items())
               for (k, l), phi in sorted(spec.bonding.items())}
    return {
        "schema": SCHEMA,
        "factors": [graph_to_json(spec.factor1), graph_to_json(spec.factor2)],
        "adhesion": [spec.adh[0].to_json(), spec.adh[1].to_json()],
        "bonding": bonding,
        "p1": spec.p1,
        "p2": spec.p2,
    }


def spec_from_json(doc):
    from .amalgam import AmalgamSpec

    check_schema(doc, "amalgam document")
    try:
        f1, f2 = doc["factors"]
        a1, a2 = doc["adhesion"]
    except (KeyError, ValueError, TypeError):
        raise SchemaError("amalgam needs two factors and two adhesion lists") from None
    g1, g2 = graph_from_json(f1), graph_from_json(f2)
    for a in (a1, a2):
        if a != "singletons" and not (isinstance(a, list) and all(isinstance(s, list) for s in a)):
            raise SchemaError("adhesion must be a list of token lists or \"singletons\"")
    bonding = {}
    for key, pairs in (doc.get("bonding") or {}).items():
        try:
            k, l = (int(t) for t in key.split(","))
            bonding[(k, l)] = {str(a): str(b) for a, b in pairs}
        except (ValueError, TypeError):
            raise SchemaError(f"bad bonding entry {key!r}") from None
    spec = AmalgamSpec(g1, g2, a1, a2, bonding, name=str(doc.get("name", "amalgam")))
    for i, key in ((1, "p1"), (2, "p2")):
        if key in doc and doc[key] != getattr(spec, key):
            raise SchemaError(f"{key}={doc[key]} but factor {i} has {getattr(spec, key)} adhesion sets")
    return spec


def error_json(err: AmalgoError) -> dict:
    return {"schema": SCHEMA, **err.to_json()}
