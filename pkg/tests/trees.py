"""Random factorisation trees over a fixed label namespace."""
import random

from amalgo.calculus import INF, Leaf, Node, end_class

# One end class per name, so random trees never clash.
NAMESPACE = {"alpha": INF, "beta": 1, "gamma": 1, "delta": 2, "eps": INF,
             "K2": 0, "K3": 0}
FINITE = [n for n, e in NAMESPACE.items() if e == 0]
INFINITE = [n for n, e in NAMESPACE.items() if e != 0]


def leaf(name):
    return Leaf(name, NAMESPACE[name], True)


def proper(a, b):
    return Node(a, b, True, True, False)


def random_tree(rng: random.Random, depth: int = 4):
    if depth == 0 or rng.random() < 0.3:
        return leaf(rng.choice(list(NAMESPACE)))
    ends = rng.choice([None, None, None, INF, 1, 2])
    acc = rng.choice([None, True, True, False])
    flags = [rng.random() < 0.85, rng.random() < 0.9, rng.random() < 0.15]
    return Node(random_tree(rng, depth - 1), random_tree(rng, depth - 1), *flags, ends, acc)


def subtrees(ft, path=()):
    yield path, ft
    if isinstance(ft, Node):
        yield from subtrees(ft.left, path + ("left",))
        yield from subtrees(ft.right, path + ("right",))


def replace(ft, path, new):
    if not path:
        return new
    head, rest = path[0], path[1:]
    child = replace(getattr(ft, head), rest, new)
    return Node(child if head == "left" else ft.left, child if head == "right" else ft.right,
                ft.nontrivial, ft.finite_adhesion, ft.star, ft.ends, ft.accessible)


def insert_finite(rng, ft):
    """Put a finite leaf under a new proper node somewhere below the root."""
    spots = [p for p, _ in subtrees(ft) if p]
    if not spots:
        return None
    p = rng.choice(spots)
    return replace(ft, p, proper(dict(subtrees(ft))[p], leaf(rng.choice(FINITE))))


def duplicate_infinite(rng, ft):
    """Replace a non-root infinite leaf by a proper amalgam of two copies."""
    spots = [p for p, t in subtrees(ft) if p and isinstance(t, Leaf) and t.ends != 0]
    if not spots:
        return None
    p = rng.choice(spots)
    t = dict(subtrees(ft))[p]
    return replace(ft, p, proper(t, t))


def multi_ended(ft) -> bool:
    return end_class(ft) == INF
