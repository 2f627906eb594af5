import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from typmatch.graph import (AttributedGraph, CommunityStructure, accuracy, block_views, inverse,
                            upper_triangle)
from typmatch.perms import compose
from typmatch.typicality import joint_type

from conftest import permutations


def random_graph(n, l=2, seed=0):
    rng = np.random.default_rng(seed)
    return AttributedGraph.from_upper_triangle(n, rng.integers(0, l, n * (n - 1) // 2), l)


def test_ut_length_complete_graph():
    g = AttributedGraph(np.ones((3, 3), int) - np.eye(3, dtype=int))
    assert upper_triangle(g, np.arange(3)).tolist() == [1, 1, 1]


def test_constant_graph_is_labeling_invariant():
    g = AttributedGraph(np.zeros((5, 5), int))
    assert not upper_triangle(g, [4, 2, 0, 1, 3]).any()


def test_ut_order_is_row_major():
    # label pairs (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
    a = np.zeros((4, 4), int)
    for k, (i, j) in enumerate(itertools.combinations(range(4), 2)):
        a[i, j] = a[j, i] = k % 3
    g = AttributedGraph(a, 3)
    assert upper_triangle(g, np.arange(4)).tolist() == [0, 1, 2, 0, 1, 2]


def test_ut_entry_reads_inverse_labels():
    g = random_graph(6, 3, seed=4)
    sigma = np.array([3, 0, 5, 1, 4, 2])
    inv = inverse(sigma)
    ut = upper_triangle(g, sigma)
    for k, (i, j) in enumerate(itertools.combinations(range(6), 2)):
        assert ut[k] == g.attr[inv[i], inv[j]]


def test_transposition_permutes_ut_positions():
    g = random_graph(4, 2, seed=1)
    a = upper_triangle(g, np.arange(4))
    b = upper_triangle(g, np.array([1, 0, 2, 3]))
    assert sorted(a) == sorted(b)
    # direct enumeration: swapping labels 0 and 1 exchanges (0,2)<->(1,2), (0,3)<->(1,3)
    assert b.tolist() == [a[0], a[3], a[4], a[1], a[2], a[5]]


@given(permutations(min_n=2, max_n=7), st.integers(0, 100))
def test_relabeling_preserves_type(pi, seed):
    n = pi.size
    g = random_graph(n, 3, seed)
    sigma = np.random.default_rng(seed).permutation(n)
    t1 = joint_type([upper_triangle(g, sigma)], (3,)).counts
    t2 = joint_type([upper_triangle(g, compose(sigma, pi))], (3,)).counts
    assert np.array_equal(t1, t2)


def test_rejects_directed_self_loops_and_range():
    with pytest.raises(ValueError):
        AttributedGraph(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        AttributedGraph(np.eye(2, dtype=int))
    with pytest.raises(ValueError):
        AttributedGraph(np.array([[0, 2], [2, 0]]), l=2)


def test_length_mismatch_raises():
    with pytest.raises(ValueError):
        upper_triangle(random_graph(4), [0, 1, 2])


def test_graph_json_round_trip():
    g = random_graph(7, 4, seed=2)
    assert np.array_equal(AttributedGraph.from_json(g.to_json()).attr, g.attr)
    with pytest.raises(ValueError):
        AttributedGraph.from_json({"n": 3, "l": 2, "edges": [[2, 1, 1]]})


def test_graph_is_read_only():
    g = random_graph(4)
    with pytest.raises(ValueError):
        g.attr[0, 1] = 1


def test_single_community_block_equals_ut():
    g = random_graph(6, seed=3)
    sigma = np.random.default_rng(0).permutation(6)
    views = block_views(g, sigma, CommunityStructure(np.zeros(6, int)))
    assert np.array_equal(views[(0, 0)], upper_triangle(g, sigma))


def test_two_by_two_block_lengths():
    views = block_views(random_graph(4), np.arange(4), CommunityStructure.from_sizes([2, 2]))
    assert [views[k].size for k in [(0, 0), (0, 1), (1, 1)]] == [1, 4, 1]


@given(st.lists(st.integers(1, 5), min_size=1, max_size=4), st.integers(0, 50))
def test_block_lengths_sum_to_ut(sizes, seed):
    comm = CommunityStructure.from_sizes(sizes)
    n = comm.n
    if n < 2:
        return
    g = random_graph(n, seed=seed)
    views = block_views(g, np.random.default_rng(seed).permutation(n), comm)
    assert sum(v.size for v in views.values()) == n * (n - 1) // 2


def test_community_validation():
    with pytest.raises(ValueError):
        CommunityStructure(np.array([0, 2, 2]), c=3)
    with pytest.raises(ValueError):
        block_views(random_graph(4), np.arange(4), CommunityStructure.from_sizes([2, 1]))


def test_accuracy_examples():
    truth = np.arange(5)
    assert accuracy(truth, truth) == 1.0
    assert accuracy(truth, np.roll(truth, 1)) == 0.0
    assert accuracy(truth, np.array([0, 1, 3, 4, 2])) == pytest.approx(0.4)
