import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amalgo.errors import BudgetExceededError, PreconditionError, UnknownVertexError
from amalgo.graphcore import (ExplicitGraph, Window, ball, complete, cycle, doubleray,
                              exact_distance, geodesic_window, grid2d, path, regtree, semitree)

from conftest import nx_ball


def test_generator_degrees():
    assert len(doubleray().neighbors("0")) == 2
    assert len(grid2d().neighbors("3,-2")) == 4
    t = regtree(3)
    assert all(len(t.neighbors(v)) == 3 for v in ball(t, None, 4).vertices)
    s = semitree(3, 5)
    degs = {len(s.neighbors(v)) for v in ball(s, None, 4).vertices}
    assert degs == {3, 5}


def test_unknown_vertex_is_reported():
    with pytest.raises(UnknownVertexError):
        doubleray().neighbors("x")
    with pytest.raises(UnknownVertexError):
        cycle(4).neighbors("4")


def test_ball_matches_networkx_bfs():
    g = grid2d()
    view, G = nx_ball(g, 6)
    oracle = nx.single_source_shortest_path_length(G, g.origin)
    assert view.dist == oracle
    assert len(view) == 2 * 6 * 7 + 1


def test_ball_order_is_distance_then_key():
    view = ball(doubleray(), None, 3)
    assert view.vertices == ["0", "-1", "1", "-2", "2", "-3", "3"]


def test_ball_budget():
    with pytest.raises(BudgetExceededError):
        ball(regtree(3), None, 20, budget=1000)


def test_negative_radius():
    with pytest.raises(PreconditionError):
        ball(cycle(3), None, -1)


def test_exports_are_sorted_and_stable():
    view = ball(cycle(4), None, 2)
    assert view.to_edgelist() == "0 1\n0 3\n1 2\n2 3\n"
    assert view.to_dot().startswith("graph ball {")
    assert view.to_json()["edges"] == [["0", "1"], ["0", "3"], ["1", "2"], ["2", "3"]]


@pytest.mark.parametrize("g", [cycle(9), complete(6), path(7)])
def test_window_distances_equal_all_pairs_bfs(g):
    verts = list(g.vertices())
    win = geodesic_window(g, verts)
    idx = [win.index[v] for v in verts]
    D = win.distances(idx)[:, idx]
    G = nx.Graph(list(g.edges()))
    G.add_nodes_from(verts)
    oracle = dict(nx.all_pairs_shortest_path_length(G))
    for i, u in enumerate(verts):
        for j, v in enumerate(verts):
            assert D[i, j] == oracle[u][v]


def test_window_marks_unreachable():
    win = Window(path(4), ["0", "1", "3"])
    assert win.distances([0]).tolist() == [[0, 1, -1]]
    assert win.multi_source([0]).tolist() == [0, 1, -1]


def test_explicit_graph_must_be_connected():
    with pytest.raises(PreconditionError):
        ExplicitGraph([("a", "b")], ["c"])


def test_exact_distance_on_trees_and_grids():
    t = regtree(3)
    assert exact_distance(t, "r.1.2", "r.2.3", 3) == 4
    assert exact_distance(grid2d(), "2,1", "-1,-1", 4) == 5
    with pytest.raises(PreconditionError):
        exact_distance(doubleray(), "0", "9", 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.data())
def test_grid_window_equals_manhattan(r, data):
    g = grid2d()
    view = ball(g, None, r)
    u = data.draw(st.sampled_from(view.vertices))
    v = data.draw(st.sampled_from(view.vertices))
    win = geodesic_window(g, [u, v])
    d = int(win.distances([win.index[u]])[0, win.index[v]])
    (a, b), (c, e) = g.coords(u), g.coords(v)
    assert d == abs(a - c) + abs(b - e)


def test_tree_hull_window_is_exact():
    t = semitree(3, 4)
    view, G = nx_ball(t, 5)
    win = geodesic_window(t, view.vertices)
    idx = np.array([win.index[v] for v in view.vertices])
    D = win.distances(idx)[:, idx]
    oracle = dict(nx.all_pairs_shortest_path_length(G))
    for i, u in enumerate(view.vertices):
        for j, v in enumerate(view.vertices):
            assert D[i, j] == oracle[u][v]
