import pytest

from amalgo.amalgam import contract, wedge
from amalgo.errors import NotMultiEndedError, PreconditionError
from amalgo.graphcore import cycle, doubleray, grid2d, regtree
from amalgo.ends import census, end_count_estimate, separation_profile

from conftest import make_s1, make_s2


@pytest.mark.parametrize("g, expected", [(doubleray(), 2), (grid2d(), 1), (cycle(5), 0),
                                         (regtree(3), ">=3")])
def test_end_classes(g, expected):
    assert end_count_estimate(g, 3).count_class == expected


def test_cubic_tree_census_doubles():
    est = end_count_estimate(regtree(3), 3)
    assert est.censuses == [12, 24, 48]
    assert census(regtree(3), 2, 6) == 6


def test_amalgams():
    assert end_count_estimate(contract(make_s1()), 3).count_class == 2
    assert end_count_estimate(contract(make_s2()), 3).count_class == ">=3"
    rays = wedge([doubleray().pointed("0") for _ in range(3)])
    assert end_count_estimate(rays, 3).count_class == ">=3"


def test_preconditions():
    with pytest.raises(PreconditionError):
        end_count_estimate(doubleray(), 3, 5)
    with pytest.raises(PreconditionError):
        end_count_estimate(doubleray(), 0)


def test_separation():
    assert separation_profile(doubleray(), 3).value == 1
    assert separation_profile(contract(make_s2()), 2).value == 1
    with pytest.raises(NotMultiEndedError):
        separation_profile(grid2d(), 3)


def test_ladder_separation_is_two():
    from amalgo.amalgam import AmalgamSpec
    from amalgo.graphcore import complete

    # K2 x Z: rungs glued rung to rung; any cut between the two ends needs 2 vertices.
    ladder = AmalgamSpec(cycle(4), cycle(4), [["0", "1"], ["2", "3"]], [["0", "1"], ["3", "2"]],
                         bonding={(1, 1): {"0": "1", "1": "0"}, (2, 1): {"2": "0", "3": "1"},
                                  (1, 2): {"0": "2", "1": "3"}, (2, 2): {"2": "3", "3": "2"}})
    est = separation_profile(contract(ladder), 3)
    assert est.value == 2
