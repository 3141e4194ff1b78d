import random

import pytest
from hypothesis import given, settings, strategies as st

from amalgo import io
from amalgo.calculus import (EQUIVALENT, FINITE_MARKER, INF, NOT_EQUIVALENT, UNKNOWN, Leaf,
                             Node, decide_qi, end_class, infinite_type_set, is_terminal,
                             load_tree, normal_form, rebuild, tree_from_json, tree_to_json)
from amalgo.errors import NamespaceError, NotMultiEndedError, PreconditionError, SchemaError

from trees import (duplicate_infinite, insert_finite, leaf, multi_ended, proper,
                   random_tree)

alpha, beta, K2 = Leaf("alpha", INF), Leaf("beta", 1), Leaf("K2", 0)


def test_terminality_and_type_sets():
    assert is_terminal(proper(K2, Leaf("K3", 0)))
    assert not is_terminal(proper(alpha, K2))
    assert is_terminal(proper(beta, K2))
    assert infinite_type_set(proper(proper(alpha, alpha), K2)) == {"alpha"}
    assert infinite_type_set(proper(alpha, beta)) == {"alpha", "beta"}
    assert infinite_type_set(proper(K2, K2)) == frozenset()


def test_end_derivation_only_in_safe_cases():
    assert end_class(proper(K2, K2)) == INF
    assert end_class(Node(K2, K2, True, True, True)) is None
    assert end_class(Node(beta, K2, True, True, True)) is None
    assert end_class(proper(beta, K2)) == INF
    assert end_class(Node(K2, K2, True, True, False, ends=2)) == 2


def test_normal_forms():
    assert normal_form(proper(K2, Leaf("K3", 0))).case == 3
    nf = normal_form(proper(beta, beta))
    assert (nf.case, nf.finite_marker) == (2, True)
    assert nf.to_json()["types"] == ["beta", FINITE_MARKER]
    nf = normal_form(proper(proper(alpha, beta), K2))
    assert nf.case == 1 and [n for n, _ in nf.types] == ["alpha", "beta"]


def test_normal_form_needs_infinitely_many_ends():
    with pytest.raises(NotMultiEndedError):
        normal_form(Node(K2, K2, True, True, False, ends=2))
    with pytest.raises(NotMultiEndedError):
        normal_form(beta)
    with pytest.raises(PreconditionError):
        normal_form(Node(beta, K2, True, True, True))


def test_decision_examples():
    assert decide_qi(proper(proper(alpha, alpha), K2), alpha).verdict == EQUIVALENT
    assert decide_qi(proper(beta, K2), proper(beta, K2)).verdict == EQUIVALENT
    g = Node(beta, Leaf("gamma", 1), True, True, False, accessible=True)
    h = Node(beta, beta, True, True, False, accessible=True)
    assert decide_qi(g, h).verdict == NOT_EQUIVALENT
    tree = proper(K2, Leaf("K3", 0))
    assert decide_qi(tree, Leaf("T", INF)).verdict == UNKNOWN


def test_two_ended_and_finite_roots():
    assert decide_qi(Leaf("Z", 2), Node(K2, K2, True, True, False, ends=2)).verdict == EQUIVALENT
    assert decide_qi(K2, Leaf("K3", 0)).verdict == EQUIVALENT


def test_namespace_conflict():
    with pytest.raises(NamespaceError):
        decide_qi(Leaf("alpha", 1), Leaf("alpha", INF))


def test_json_round_trip_and_schema_errors():
    t = Node(proper(alpha, K2), beta, True, False, True, ends=INF, accessible=False)
    assert tree_from_json(tree_to_json(t)) == t
    doc = {"schema": io.SCHEMA, "tree": tree_to_json(t)}
    assert load_tree(doc) == t
    with pytest.raises(SchemaError):
        load_tree({"tree": tree_to_json(t)})
    with pytest.raises(SchemaError):
        tree_from_json({"node": {"left": tree_to_json(K2), "right": tree_to_json(K2),
                                 "nontrivial": True, "finite_adhesion": True}})
    with pytest.raises(SchemaError):
        tree_from_json({"leaf": {"name": "x", "ends": 3}})


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=300, deadline=None)
@given(seeds, seeds)
def test_symmetry_and_reflexivity(a, b):
    g, h = random_tree(random.Random(a)), random_tree(random.Random(b))
    assert decide_qi(g, h).verdict == decide_qi(h, g).verdict
    assert decide_qi(g, g).verdict == EQUIVALENT


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_idempotence_and_finite_insertion(a):
    rng = random.Random(a)
    g = random_tree(rng)
    if not multi_ended(g):
        return
    nf = normal_form(g)
    assert normal_form(rebuild(nf)) == nf
    if infinite_type_set(g):
        bigger = insert_finite(rng, g)
        if bigger is not None:
            assert normal_form(bigger) == nf


@settings(max_examples=300, deadline=None)
@given(seeds, seeds)
def test_duplication_and_soundness(a, b):
    rng = random.Random(a)
    g, h = random_tree(rng), random_tree(random.Random(b))
    dup = duplicate_infinite(rng, g)
    if dup is not None:
        assert infinite_type_set(dup) == infinite_type_set(g)
        assert decide_qi(dup, h).verdict == decide_qi(g, h).verdict
    if not (is_terminal(g) and is_terminal(h)) and infinite_type_set(g) != infinite_type_set(h):
        assert decide_qi(g, h).verdict != NOT_EQUIVALENT
