"""Shared presentations and graph oracles."""
import networkx as nx
import pytest

from amalgo.amalgam import AmalgamSpec
from amalgo.graphcore import ball, complete, cycle, path, to_networkx


def make_s1():
    """K2 with K2 over singletons: the (2,2) tree amalgam, a double ray."""
    return AmalgamSpec(complete(2), complete(2), [["0"], ["1"]], [["0"], ["1"]], name="S1")


def make_s2():
    """Triangle with K2 over singletons: a 3-regular graph."""
    return AmalgamSpec(cycle(3), complete(2), [["0"], ["1"], ["2"]], [["0"], ["1"]], name="S2")


def normalisation_suite():
    """Presentations with larger, overlapping or repeated adhesion sets."""
    return {
        "S2": make_s2(),
        "size2": AmalgamSpec(path(3), cycle(4), [["0", "2"]], [["0", "2"], ["1", "3"]]),
        "overlap": AmalgamSpec(cycle(4), complete(2), [["0"], ["0"], ["2"]], [["0"], ["1"]]),
        "both": AmalgamSpec(cycle(6), cycle(4), [["0", "1"], ["1", "2"], ["3", "4"]],
                            [["0", "1"], ["2", "3"]]),
        "equal": AmalgamSpec(complete(3), cycle(6), [["0", "1"], ["0", "1"]],
                             [["0", "1"], ["3", "4"]]),
    }


@pytest.fixture
def s1():
    return make_s1()


@pytest.fixture
def s2():
    return make_s2()


def nx_ball(g, r, center=None):
    view = ball(g, center, r)
    G = to_networkx(view)
    nx.set_node_attributes(G, view.dist, "dist")
    return view, G


def rooted_isomorphic(g, h, r):
    """Balls of radius r about the origins agree as rooted graphs."""
    _, A = nx_ball(g, r)
    _, B = nx_ball(h, r)
    return nx.is_isomorphic(A, B, node_match=lambda a, b: a["dist"] == b["dist"])


# criterion number -> (passed, title, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
