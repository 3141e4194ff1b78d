"""Command-line front end: ``amalgo <command> ...``.

Exit status 0 means success (or a passing check), 1 a check that ran and
failed (the report carries a witness), 2 malformed input or an exceeded budget
(an error document is printed).
"""
from __future__ import annotations

import argparse
import sys

from . import io
from .errors import AmalgoError, SchemaError
from .graphcore import DEFAULT_VERTEX_BUDGET

MAPS = ("psi", "collapse", "cubic", "absorb", "normalize", "treefact")
FORMATS = ("json", "dot", "edgelist")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(f"usage: {message}")


def _radii(text: str) -> list[int]:
    try:
        radii = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise SchemaError(f"radii must be comma-separated integers, got {text!r}") from None
    if not radii or any(r < 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise SchemaError("radii must be a nonempty strictly increasing list of nonnegative integers")
    return radii


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        n = 0
    if n <= 0:
        raise SchemaError(f"budgets and job counts must be positive integers, got {text!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-r", "--radii", type=_radii, default=None,
                        help="comma-separated, strictly increasing radii")
    common.add_argument("--budget-vertices", type=_positive, default=DEFAULT_VERTEX_BUDGET)
    common.add_argument("--budget-pairs", type=_positive, default=10**7)
    common.add_argument("--out", default=None, help="write the artifact here instead of stdout")
    common.add_argument("--format", choices=FORMATS, default="json")
    common.add_argument("--jobs", type=_positive, default=1)

    p = _Parser(prog="amalgo", description="Tree amalgamations of graphs and quasi-isometry checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", parents=[common], help="ball of the contracted amalgam of a presentation")
    b.add_argument("spec")

    b = sub.add_parser("ball", parents=[common], help="ball about a vertex of a graph or amalgam")
    b.add_argument("graph")
    b.add_argument("--center", default=None)

    b = sub.add_parser("dist", parents=[common], help="exact distance of two vertices in B(origin, r)")
    b.add_argument("graph")
    b.add_argument("u")
    b.add_argument("v")

    b = sub.add_parser("verify", parents=[common], help="construct a map and check its claim")
    b.add_argument("input")
    b.add_argument("--map", choices=MAPS, required=True)

    b = sub.add_parser("ends", parents=[common], help="end count class and separation estimate")
    b.add_argument("graph")
    b.add_argument("--outer", type=int, default=None, help="outer radius R (default 3r)")
    b.add_argument("--separation", action="store_true")

    c = sub.add_parser("calc", help="factorisation-tree calculus")
    csub = c.add_subparsers(dest="calc_command", required=True, parser_class=_Parser)
    d = csub.add_parser("decide", parents=[common])
    d.add_argument("a")
    d.add_argument("b")
    n = csub.add_parser("normal-form", parents=[common])
    n.add_argument("tree")
    return p


def _load_graph(path):
    doc = io.load(path)
    io.check_schema(doc, path)
    return io.graph_from_json(doc)


def _load_spec(path):
    return io.spec_from_json(io.load(path))


def _single_radius(args, default: int) -> int:
    if args.radii is None:
        return default
    if len(args.radii) != 1:
        raise SchemaError("this command takes a single radius")
    return args.radii[0]


def _render_ball(view, fmt: str):
    if fmt == "dot":
        return view.to_dot()
    if fmt == "edgelist":
        return view.to_edgelist()
    return io.dumps({"schema": io.SCHEMA, "ball": view.to_json()})


def _construct(kind: str, path: str):
    from . import qimaps
    from .amalgam import contract

    if kind == "cubic":
        return qimaps.cubic_tree_map(_load_graph(path)), {}
    spec = _load_spec(path)
    if kind == "psi":
        return qimaps.psi_map(spec), {}
    if kind == "collapse":
        return qimaps.tree_collapse_map(spec), {}
    if kind == "absorb":
        return qimaps.absorb_finite_factor(spec), {}
    if kind == "normalize":
        norm = qimaps.adhesion_normalize(spec)
        return norm.forward, {"clauses": qimaps.normalised_clauses(norm.spec)}
    tf = qimaps.tree_factorisation_map(contract(spec))
    return tf.result, {"tree_ends": tf.ends.to_json(), "cubic_step": tf.cubic is not None}


def _run(args) -> tuple[int, str]:
    from .graphcore import ball, exact_distance

    cmd = args.command
    if args.format != "json" and cmd not in ("build", "ball"):
        raise SchemaError(f"--format {args.format} only applies to build and ball")
    if cmd == "build":
        from .amalgam import contract

        g = contract(_load_spec(args.spec))
        return 0, _render_ball(ball(g, g.origin, _single_radius(args, 3), args.budget_vertices),
                               args.format)
    if cmd == "ball":
        g = _load_graph(args.graph)
        return 0, _render_ball(ball(g, args.center, _single_radius(args, 3), args.budget_vertices),
                               args.format)
    if cmd == "dist":
        g = _load_graph(args.graph)
        a = _single_radius(args, 8)
        d = exact_distance(g, args.u, args.v, a, args.budget_vertices)
        return 0, io.dumps({"schema": io.SCHEMA, "u": args.u, "v": args.v, "radius": a,
                            "distance": d})
    if cmd == "verify":
        from .qiverify import check_claim

        f, extra = _construct(args.map, args.input)
        radii = args.radii or [4, 6, 8]
        res = check_claim(f, radii, budget_vertices=args.budget_vertices,
                          budget_pairs=args.budget_pairs, jobs=args.jobs)
        doc = {"schema": io.SCHEMA, "map": args.map, "tag": f.tag, "radii": radii,
               "claimed": f.claimed.to_json(), **res.to_json(), **extra}
        ok = res.passed and all(extra.get("clauses", {}).values())
        return (0 if ok else 1), io.dumps(doc)
    if cmd == "ends":
        from .ends import end_count_estimate, separation_profile

        g = _load_graph(args.graph)
        r = _single_radius(args, 3)
        est = end_count_estimate(g, r, args.outer, args.budget_vertices)
        doc = {"schema": io.SCHEMA, "ends": est.to_json()}
        if args.separation:
            doc["separation"] = separation_profile(g, r, None, args.budget_vertices).to_json()
        return 0, io.dumps(doc)
    from . import calculus

    if args.calc_command == "decide":
        a = calculus.load_tree(io.load(args.a))
        b = calculus.load_tree(io.load(args.b))
        return 0, io.dumps({"schema": io.SCHEMA, **calculus.decide_qi(a, b).to_json()})
    t = calculus.load_tree(io.load(args.tree))
    return 0, io.dumps({"schema": io.SCHEMA, "normal_form": calculus.normal_form(t).to_json()})


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv=None) -> int:
    out = None
    try:
        args = build_parser().parse_args(argv)
        out = args.out
        status, text = _run(args)
    except AmalgoError as e:
        status, text = 2, io.dumps(io.error_json(e))
    except RecursionError:
        status, text = 2, io.dumps({"schema": io.SCHEMA, "error": "too-deep",
                                    "message": "input nesting too deep"})
    try:
        _emit(text, out)
    except OSError as e:
        sys.stdout.write(io.dumps({"schema": io.SCHEMA, "error": "output",
                                   "message": f"cannot write {out}: {e.strerror}"}))
        return 2
    return status


if __name__ == "__main__":
    sys.exit(main())
