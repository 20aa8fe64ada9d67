import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmschauder.tree import (
    MAX_DEPTH,
    TreeError,
    flat_index,
    general_tree,
    grid_labels,
    make_tree,
    node_of_flat,
    prefix_order_times,
    tree_rows,
    uniform_tree,
)


def test_uniform_nodes():
    assert uniform_tree(1).node(1, 0) == (0.0, 0.5, 1.0)
    assert uniform_tree(3).node(3, 2) == (0.5, 0.625, 0.75)
    tree = uniform_tree(8)
    for n in range(1, 9):
        assert tree.mesh(n) == 2.0 ** (-n + 1)
        for k in range(tree.level_size(n)):
            assert tree.node(n, k) == (2 * k * 2.0**-n, (2 * k + 1) * 2.0**-n, 2 * (k + 1) * 2.0**-n)


def test_depth_limits():
    uniform_tree(0)
    with pytest.raises(TreeError):
        uniform_tree(MAX_DEPTH + 1)
    with pytest.raises(TreeError):
        uniform_tree(-1)
    with pytest.raises(TreeError):
        prefix_order_times(uniform_tree(3), 4)


def test_deep_uniform_tree_is_exact():
    tree = uniform_tree(20)
    m = tree.mid[20]
    assert np.array_equal(m * 2.0**20, 2 * np.arange(m.size) + 1)


def test_general_tree_bisection_is_uniform():
    a, b = general_tree(6, lambda l, r: 0.5 * (l + r)), uniform_tree(6)
    for n in range(7):
        assert np.array_equal(a.left[n], b.left[n])
        assert np.array_equal(a.right[n], b.right[n])
        if n:
            assert np.array_equal(a.mid[n], b.mid[n])


def test_golden_tree():
    tree = general_tree(4, lambda l, r: l + 0.382 * (r - l))
    assert tree.mesh(4) == pytest.approx(0.618**3, rel=1e-12)
    meshes = [tree.mesh(n) for n in range(1, 5)]
    assert meshes == sorted(meshes, reverse=True)
    _check_nesting(tree)


def test_golden_mesh_convention():
    # level 1 is the whole interval; a depth-4 mesh of 0.618^4 needs one more split
    tree = general_tree(5, lambda l, r: l + 0.382 * (r - l))
    assert tree.mesh(5) == pytest.approx(0.618**4, rel=1e-12)


def test_general_tree_rejects_boundary_midpoints():
    with pytest.raises(TreeError):
        general_tree(3, lambda l, r: l)
    with pytest.raises(TreeError):
        general_tree(3, lambda l, r: r + 0.1)
    with pytest.raises(TreeError):
        make_tree(3, 1.0)


def _check_nesting(tree):
    for n in range(1, tree.depth):
        l, m, r = tree.left[n], tree.mid[n], tree.right[n]
        assert np.array_equal(tree.right[n + 1][0::2], m)
        assert np.array_equal(tree.left[n + 1][1::2], m)
        assert np.array_equal(tree.left[n + 1][0::2], l)
        assert np.array_equal(tree.right[n + 1][1::2], r)
    for n in range(1, tree.depth + 1):
        assert tree.left[n][0] == 0.0 and tree.right[n][-1] == 1.0
        assert np.array_equal(tree.left[n][1:], tree.right[n][:-1])


@given(st.floats(0.05, 0.95), st.integers(1, 8))
def test_nesting_and_grid(split, depth):
    tree = make_tree(depth, split)
    _check_nesting(tree)
    for N in range(depth + 1):
        t = prefix_order_times(tree, N)
        assert t.size == 2**N + 1
        assert np.all(np.diff(t) > 0)
        assert set(t) == {0.0, 1.0} | {float(x) for n in range(1, N + 1) for x in tree.mid[n]}


def test_prefix_order_examples():
    assert np.array_equal(prefix_order_times(uniform_tree(2), 2), [0, 0.25, 0.5, 0.75, 1])
    assert np.array_equal(prefix_order_times(uniform_tree(0), 0), [0, 1])
    assert np.array_equal(prefix_order_times(uniform_tree(7), 7), np.arange(129) / 128)


def test_flat_index_convention():
    labels = grid_labels(2)
    times = prefix_order_times(uniform_tree(2), 2)
    assert labels[list(times).index(0.5)] == flat_index(1, 0) == 1
    assert list(labels) == [0, 2, 1, 3, 4]
    for i in range(1, 300):
        assert flat_index(*node_of_flat(i)) == i
    assert node_of_flat(0) == (0, 0)


def test_locate_half_open():
    tree = uniform_tree(3)
    assert list(tree.locate(3, [0.0, 0.2499, 0.25, 0.999, 1.0])) == [0, 0, 1, 3, 3]


def test_tree_rows():
    rows = tree_rows(uniform_tree(2))
    assert rows == [(1, 0, 0.0, 0.5, 1.0), (2, 0, 0.0, 0.25, 0.5), (2, 1, 0.5, 0.75, 1.0)]
