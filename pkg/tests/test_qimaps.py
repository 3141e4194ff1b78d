import pytest

from amalgo.amalgam import AmalgamSpec, contract, sum_graph
from amalgo.errors import MismatchedEndpointError, PreconditionError
from amalgo.graphcore import (ball, complete, cycle, doubleray, grid2d, regtree, semitree)
from amalgo.qimaps import (QiConstants, QiMap, absorb_finite_factor, adhesion_normalize,
                           compose, cubic_tree_map, identity, normalised_clauses, psi_map,
                           tree_collapse_map, tree_factorisation_map)
from amalgo.qiverify import check_claim

from conftest import make_s1, make_s2, normalisation_suite


def test_constants_validation():
    with pytest.raises(PreconditionError):
        QiConstants(0, 1)
    assert QiConstants(2, 1, 3).to_json() == {"gamma": 2, "c": 1, "density_c": 3}


def test_compose_rules():
    d = doubleray()
    shift = QiMap(d, d, lambda v: str(int(v) + 1), QiConstants(1, 0, 0), "shift")
    twice = compose(shift, shift)
    assert twice("3") == "5"
    assert twice.claimed == QiConstants(1, 0, 0)
    with pytest.raises(MismatchedEndpointError):
        compose(shift, identity(grid2d()))


def test_compose_constants():
    d = doubleray()
    f = QiMap(d, d, lambda v: v, QiConstants(2, 3, 1), "f")
    g = QiMap(d, d, lambda v: v, QiConstants(5, 7, 2), "g")
    assert compose(f, g).claimed == QiConstants(10, 5 * 3 + 7, 5 * 1 + 7 + 2)


@pytest.mark.parametrize("make", [make_s1, make_s2])
def test_psi_and_collapse(make):
    spec = make()
    p = psi_map(spec)
    assert p.claimed == QiConstants(2, 2, 0)
    assert check_claim(p, [4, 6]).passed
    assert check_claim(tree_collapse_map(spec), [4, 6]).passed


def test_cubic_map_on_cubic_tree_is_an_isometry():
    f = cubic_tree_map(regtree(3))
    assert f.claimed == QiConstants(1, 0, 0)
    assert check_claim(f, [6]).passed


def test_cubic_map_needs_three_ends():
    with pytest.raises(PreconditionError):
        cubic_tree_map(semitree(2, 2))


def test_cubic_map_bounds():
    f = cubic_tree_map(semitree(3, 4))
    assert f.claimed.gamma <= 4 - 2 and f.claimed.c <= 4
    assert check_claim(f, [6]).passed


def test_absorb_displacement_and_claim():
    spec = AmalgamSpec(complete(3).pointed("0"), doubleray().pointed("0"),
                       "singletons", "singletons")
    f = absorb_finite_factor(spec)
    sg = sum_graph(spec)
    for v in ball(sg, None, 6).vertices:
        assert f(v) in ball(sg, v, 2)
    assert check_claim(f, [4, 6]).passed


def test_absorb_preconditions():
    with pytest.raises(PreconditionError):
        absorb_finite_factor(make_s2())


@pytest.mark.parametrize("name", sorted(normalisation_suite()))
def test_normalisation(name):
    spec = normalisation_suite()[name]
    norm = adhesion_normalize(spec)
    assert normalised_clauses(norm.spec) == {"adhesion_one": True, "distinct": True,
                                             "cover": True}
    assert check_claim(norm.forward, [4]).passed


def test_split_copies_joined_by_an_edge():
    spec = normalisation_suite()["overlap"]
    stage2 = adhesion_normalize(spec).specs[1]
    g = stage2.factor1
    assert {"0#1", "0#2"} <= set(g.vertices())
    assert "0#2" in g.neighbors("0#1")


def test_tree_factorisation_s1_skips_cubic_step():
    tf = tree_factorisation_map(contract(make_s1()))
    assert tf.ends.count_class == 2 and tf.cubic is None
    assert check_claim(tf.result, [4, 6]).passed


def test_tree_factorisation_s2_lands_in_cubic_tree():
    tf = tree_factorisation_map(contract(make_s2()))
    assert tf.cubic is not None and tf.result.target.kind == "regtree"
    assert check_claim(tf.result, [6]).passed


def test_tree_factorisation_single_leaf():
    tf = tree_factorisation_map(cycle(5))
    assert list(tf.result.target.vertices()) == ["*"]
    assert check_claim(tf.result, [3]).passed


def test_tree_factorisation_nested():
    g = contract(make_s2())
    outer = AmalgamSpec(g, complete(2), [[g.origin], [g.psi("@.1.2:1")]], [["0"], ["1"]])
    tf = tree_factorisation_map(contract(outer))
    assert check_claim(tf.tree_map, [4]).passed
