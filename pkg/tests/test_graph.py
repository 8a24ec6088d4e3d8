import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from decouplenet.graph import (
    TopologySchedule,
    WeightedDigraph,
    check_laplacian,
    graph_at,
    has_spanning_tree,
    laplacian,
    row_sum_tolerance,
    spanning_tree_gap_intervals,
)
from decouplenet.linalg import eigenvalues

from conftest import random_digraph


def test_laplacian_two_vertex_mutual():
    lap = laplacian(WeightedDigraph([[0, 1], [1, 0]]))
    np.testing.assert_array_equal(lap, [[1, -1], [-1, 1]])


def test_laplacian_empty_graph():
    np.testing.assert_array_equal(laplacian(WeightedDigraph(np.zeros((3, 3)))), np.zeros((3, 3)))


def test_laplacian_directed_cycle_by_hand():
    lap = laplacian(WeightedDigraph([[0, 2, 0], [0, 0, 3], [1, 0, 0]]))
    np.testing.assert_array_equal(lap, [[2, -2, 0], [0, 3, -3], [-1, 0, 1]])
    np.testing.assert_array_equal(lap @ np.ones(3), 0)


def test_self_loops_dropped():
    g = WeightedDigraph([[5, 1], [1, 7]])
    np.testing.assert_array_equal(np.diag(g.weights), 0)


def test_graph_is_immutable():
    g = WeightedDigraph([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        g.weights[0, 1] = 3


@pytest.mark.parametrize("w", [[[0, -1], [1, 0]], [[0, 1, 2], [1, 0, 1]], [[0, np.nan], [1, 0]]])
def test_invalid_weights_rejected(w):
    with pytest.raises(ValueError):
        WeightedDigraph(w)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.just(7)),
              elements=st.floats(0, 1e3, allow_nan=False)))
def test_laplacian_rows_sum_to_zero(block):
    n = block.shape[0]
    g = WeightedDigraph(block[:, :n])
    lap = laplacian(g)
    assert np.all(np.abs(lap @ np.ones(n)) <= row_sum_tolerance(lap))
    off = lap[~np.eye(n, dtype=bool)]
    assert np.all(off <= 0)
    check_laplacian(lap)


def test_check_laplacian_rejects_nonzero_rows():
    with pytest.raises(ValueError, match="sum to zero"):
        check_laplacian(np.eye(2))


def test_spanning_tree_path():
    # agent 2 hears 1, agent 3 hears 2
    w = np.zeros((3, 3))
    w[1, 0] = w[2, 1] = 1
    assert has_spanning_tree(WeightedDigraph(w))


def test_spanning_tree_isolated_pair():
    assert not has_spanning_tree(WeightedDigraph(np.zeros((2, 2))))


def test_spanning_tree_two_sources():
    # 1 -> 3 <- 2: two roots, nobody reaches both others
    w = np.zeros((3, 3))
    w[2, 0] = w[2, 1] = 1
    assert not has_spanning_tree(WeightedDigraph(w))


def test_single_vertex_has_tree():
    assert has_spanning_tree(WeightedDigraph([[0]]))


def _zero_multiplicity(lap):
    lam = eigenvalues(lap)
    return int(np.sum(np.abs(lam) <= 1e-8 * (1 + np.linalg.norm(lap))))


def test_spanning_tree_matches_simple_zero_eigenvalue(rng):
    seen = set()
    for _ in range(200):
        n = int(rng.integers(2, 7))
        g = random_digraph(rng, n, p=rng.uniform(0.1, 0.6))
        tree = has_spanning_tree(g)
        seen.add(tree)
        assert tree == (_zero_multiplicity(laplacian(g)) == 1)
    assert seen == {True, False}


def _two_segment():
    connected = WeightedDigraph([[0, 1], [1, 0]])
    empty = WeightedDigraph(np.zeros((2, 2)))
    return connected, empty


def test_graph_at_single_segment():
    g, _ = _two_segment()
    s = TopologySchedule.constant(g, 20)
    assert graph_at(s, 5) == g


def test_graph_at_boundary_is_left_closed():
    g, e = _two_segment()
    s = TopologySchedule(((0, g), (10, e)), 30)
    assert graph_at(s, 10) == e
    assert graph_at(s, 9.999) == g
    assert graph_at(s, 30) == e


@pytest.mark.parametrize("t", [-1, 30.5])
def test_graph_at_out_of_range(t):
    g, _ = _two_segment()
    with pytest.raises(ValueError):
        graph_at(TopologySchedule.constant(g, 30), t)


@pytest.mark.parametrize("segments,horizon", [
    (((1, np.zeros((2, 2))),), 5),
    (((0, np.zeros((2, 2))), (0, np.zeros((2, 2)))), 5),
    (((0, np.zeros((2, 2))), (3, np.zeros((3, 3)))), 5),
    (((0, np.zeros((2, 2))), (3, np.zeros((2, 2)))), 3),
])
def test_schedule_validation(segments, horizon):
    with pytest.raises(ValueError):
        TopologySchedule(segments, horizon)


def test_gap_intervals_all_connected():
    g, _ = _two_segment()
    assert spanning_tree_gap_intervals(TopologySchedule(((0, g), (5, g)), 10)) == []


def test_gap_intervals_single_gap():
    g, e = _two_segment()
    s = TopologySchedule(((0, g), (10, e), (20, g)), 40)
    assert spanning_tree_gap_intervals(s) == [(10, 20)]


def test_gap_intervals_merge_adjacent():
    g, e = _two_segment()
    e2 = WeightedDigraph([[0, 0], [0, 0]])
    s = TopologySchedule(((0, g), (10, e), (20, e2), (30, g)), 40)
    assert spanning_tree_gap_intervals(s) == [(10, 30)]


def test_gap_intervals_trailing_gap_reaches_horizon():
    g, e = _two_segment()
    s = TopologySchedule(((0, g), (10, e)), 50)
    assert spanning_tree_gap_intervals(s) == [(10, 50)]
