import networkx as nx
import pytest

from amalgo import io
from amalgo.amalgam import (AmalgamSpec, base_edge, base_point_amalgam, contract,
                            extension_anchor, finite_extension, identification, is_trivial,
                            sum_graph, wedge)
from amalgo.errors import AdhesionError, SchemaError, UnknownVertexError
from amalgo.graphcore import ball, complete, cycle, doubleray, to_networkx

from conftest import nx_ball, rooted_isomorphic


def test_s1_is_a_double_ray(s1):
    g = contract(s1)
    for r in range(1, 8):
        assert rooted_isomorphic(g, doubleray(), r)


def test_s2_is_cubic_and_sum_graph_is_not(s2):
    g = contract(s2)
    view = ball(g, None, 6)
    assert {len(g.neighbors(v)) for v in view.vertices} == {3}
    sview = ball(sum_graph(s2), None, 6)
    assert {len(sum_graph(s2).neighbors(v)) for v in sview.vertices} == {2, 3}


def test_contraction_matches_networkx_quotient(s2):
    # Contract the bridging edges of a sum-graph ball by hand and compare.
    sg = sum_graph(s2)
    view = ball(sg, None, 9)
    G = to_networkx(view)
    bridges = [(u, w) for u, w in G.edges() if s2.parse(u)[0] != s2.parse(w)[0]]
    H = nx.Graph(bridges)
    H.add_nodes_from(G)
    classes = list(nx.connected_components(H))
    Q = nx.quotient_graph(G, classes)
    Q.remove_edges_from(nx.selfloop_edges(Q))
    c = contract(s2)
    inner = {frozenset(k) for k in classes if all(view.dist[v] <= 6 for v in k)}
    for k in inner:
        z = c.psi(next(iter(k)))
        assert {c.psi(v) for v in k} == {z}
        assert len(Q[frozenset(k)]) == len(c.neighbors(z))


def test_identification_size_and_length(s2):
    assert identification(s2, "@:0") == (2, 1)


def test_triviality():
    assert is_trivial(AmalgamSpec(cycle(3), complete(2), [["0"], ["1"], ["2"]],
                                  [["0"], ["1"]])).status == "nontrivial"
    whole = AmalgamSpec(complete(2), cycle(4), [["0", "1"]], [["0", "1"], ["2", "3"]])
    assert is_trivial(whole).status == "trivial"


def test_adhesion_cardinalities_must_match():
    with pytest.raises(AdhesionError):
        AmalgamSpec(cycle(3), complete(2), [["0", "1"], ["2"]], [["0"], ["1"]])


def test_adhesion_members_must_exist():
    with pytest.raises((AdhesionError, UnknownVertexError)):
        AmalgamSpec(cycle(3), complete(2), [["0"], ["7"]], [["0"], ["1"]])


def test_spec_json_round_trip(s2):
    doc = io.spec_to_json(s2)
    again = io.spec_from_json(doc)
    assert io.dumps(io.spec_to_json(again)) == io.dumps(doc)
    bad = dict(doc, p1=5)
    with pytest.raises(SchemaError):
        io.spec_from_json(bad)
    with pytest.raises(SchemaError):
        io.spec_from_json({k: v for k, v in doc.items() if k != "schema"})


def test_explicit_bonding_changes_the_graph():
    plain = AmalgamSpec(cycle(4), cycle(4), [["0", "1"], ["2", "3"]], [["0", "1"], ["2", "3"]])
    twisted = AmalgamSpec(cycle(4), cycle(4), [["0", "1"], ["2", "3"]], [["0", "1"], ["2", "3"]],
                          bonding={(1, 1): {"0": "1", "1": "0"}})
    assert contract(plain).neighbors(contract(plain).origin)
    assert contract(twisted).neighbors(contract(twisted).origin)
    assert io.spec_to_json(twisted)["bonding"] == {"1,1": [["0", "1"], ["1", "0"]]}


def test_finite_extension_is_locally_identical(s2):
    ext, rewritten = finite_extension(s2)
    assert (rewritten.p1, rewritten.p2) == (4, 2)
    assert len(list(ext.vertices())) == 6
    a, b = extension_anchor(s2, rewritten)
    for r in range(1, 6):
        _, A = nx_ball(contract(s2), r, a)
        _, B = nx_ball(contract(rewritten), r, b)
        assert nx.is_isomorphic(A, B, node_match=lambda x, y: x["dist"] == y["dist"])


def test_base_point_amalgam_and_wedge():
    spec = base_point_amalgam(cycle(3).pointed("0"), doubleray().pointed("0"))
    u, v = base_edge(spec)
    assert (u, v) == ("@:0", "@.1:0")
    assert v in sum_graph(spec).neighbors(u)
    w = wedge([cycle(3).pointed("0"), cycle(3).pointed("1")])
    view = ball(w, None, 10)
    assert len(view) == 6 and len(view.edges()) == 7
