"""CART regression trees: splits, tie-breaking, stopping rules, prediction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qosgp.cart import (
    CartParams,
    cart_fit,
    cart_predict,
    cart_predict_batch,
    save_tree,
    tree_to_dict,
)
from qosgp.data import Dataset
from qosgp.stats import mse


def grown(X, y, **params):
    defaults = dict(min_leaf=1, max_depth=30, min_impurity_decrease=0.0)
    defaults.update(params)
    return cart_fit(Dataset(np.asarray(X, dtype=float), np.asarray(y, dtype=float)),
                    CartParams(**defaults))


def test_params_validation():
    with pytest.raises(ValueError):
        CartParams(min_leaf=0)
    with pytest.raises(ValueError):
        CartParams(max_depth=0)
    with pytest.raises(ValueError):
        CartParams(min_impurity_decrease=-1.0)


def test_single_split_hand_example():
    tree = grown([[0.0], [1.0], [2.0], [3.0]], [0.0, 0.0, 10.0, 10.0], max_depth=1)
    root = tree.nodes[0]
    assert root.split_dim == 0
    assert root.split_threshold == pytest.approx(1.5)  # midpoint of 1 and 2
    assert cart_predict(tree, [0.7]) == pytest.approx(0.0)
    assert cart_predict(tree, [1.5]) == pytest.approx(0.0)  # boundary goes left
    assert cart_predict(tree, [2.9]) == pytest.approx(10.0)


def test_threshold_tie_breaks_to_smallest():
    # splitting at 0.5 or at 2.5 removes the same SSE; pick the smaller
    tree = grown([[0.0], [1.0], [2.0], [3.0]], [0.0, 10.0, 10.0, 0.0], max_depth=1)
    assert tree.nodes[0].split_threshold == pytest.approx(0.5)


def test_dimension_tie_breaks_to_lowest():
    # identical feature copied into both columns: equal gains everywhere
    X = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]
    tree = grown(X, [0.0, 0.0, 10.0, 10.0], max_depth=1)
    assert tree.nodes[0].split_dim == 0


def test_min_leaf_blocks_unbalanced_splits():
    # min_leaf = 2 forbids the 1-vs-3 cut even though it has the best gain
    tree = grown([[0.0], [1.0], [2.0], [3.0]], [100.0, 0.0, 1.0, 2.0], min_leaf=2, max_depth=1)
    assert tree.nodes[0].split_threshold == pytest.approx(1.5)


def test_min_leaf_forces_leaf_when_too_few_rows():
    tree = grown([[0.0], [1.0], [2.0]], [0.0, 5.0, 10.0], min_leaf=2)
    assert tree.depth == 0
    assert cart_predict(tree, [9.9]) == pytest.approx(5.0)


def test_max_depth_limits_tree():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 10, size=(64, 2))
    y = rng.normal(size=64)
    for depth in (1, 2, 3):
        tree = grown(X, y, max_depth=depth)
        assert tree.depth <= depth


def test_impurity_floor_blocks_weak_splits():
    X, y = [[0.0], [1.0], [2.0], [3.0]], [0.0, 0.0, 10.0, 10.0]
    assert grown(X, y, min_impurity_decrease=1e6).depth == 0
    assert grown(X, y, min_impurity_decrease=1.0).depth > 0


def test_constant_targets_make_single_leaf():
    tree = grown([[0.0], [1.0], [2.0]], [4.0, 4.0, 4.0])
    assert tree.depth == 0
    assert len(tree.nodes) == 1


def test_constant_features_make_single_leaf():
    tree = grown([[2.0], [2.0], [2.0]], [1.0, 2.0, 3.0])
    assert tree.depth == 0


def test_fully_grown_tree_interpolates_unique_rows():
    rng = np.random.default_rng(3)
    X = rng.permutation(30).reshape(-1, 1).astype(float)
    y = rng.normal(size=30)
    tree = grown(X, y)
    np.testing.assert_allclose(cart_predict_batch(tree, X), y, atol=1e-12)


def test_row_order_does_not_change_the_tree():
    rng = np.random.default_rng(4)
    X = rng.uniform(0, 5, size=(40, 3))
    y = rng.normal(size=40)
    tree = grown(X, y)
    perm = rng.permutation(40)
    shuffled = grown(X[perm], y[perm])
    # identical structure; leaf means may differ by summation order round-off
    assert len(tree.nodes) == len(shuffled.nodes)
    for a, b in zip(tree.nodes, shuffled.nodes):
        assert (a.split_dim, a.split_threshold, a.left, a.right, a.count) == (
            b.split_dim, b.split_threshold, b.left, b.right, b.count
        )
        assert a.mean_target == pytest.approx(b.mean_target, rel=1e-12, abs=1e-12)


def test_deeper_trees_never_hurt_training_mse():
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 5, size=(60, 2))
    y = rng.normal(size=60)
    errors = []
    for depth in range(1, 10):
        tree = grown(X, y, max_depth=depth)
        errors.append(mse(cart_predict_batch(tree, X), y))
    assert all(a >= b - 1e-12 for a, b in zip(errors, errors[1:]))


def test_predict_validation():
    tree = grown([[0.0, 1.0], [2.0, 3.0]], [0.0, 1.0])
    with pytest.raises(ValueError, match="shape"):
        cart_predict(tree, [1.0])
    with pytest.raises(ValueError, match="shape"):
        cart_predict_batch(tree, np.zeros((2, 3)))


def test_node_counts_partition_the_data():
    rng = np.random.default_rng(6)
    X = rng.uniform(0, 5, size=(50, 2))
    y = rng.normal(size=50)
    tree = grown(X, y, min_leaf=5)
    assert tree.nodes[0].count == 50
    for node in tree.nodes:
        if not node.is_leaf:
            left, right = tree.nodes[node.left], tree.nodes[node.right]
            assert left.count + right.count == node.count
        else:
            assert node.count >= 5
    assert sum(n.count for n in tree.leaves()) == 50


def test_tree_serialization(tmp_path):
    tree = grown([[0.0], [1.0], [2.0], [3.0]], [0.0, 0.0, 10.0, 10.0], max_depth=1)
    obj = tree_to_dict(tree)
    assert obj["input_dim"] == 1
    assert obj["nodes"][0]["type"] == "split"
    assert {n["type"] for n in obj["nodes"][1:]} == {"leaf"}
    path = tmp_path / "tree.json"
    save_tree(tree, path)
    assert path.read_text().startswith("{")


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    n=st.integers(min_value=2, max_value=40),
    min_leaf=st.integers(min_value=1, max_value=5),
)
def test_predictions_stay_within_target_range(seed, n, min_leaf):
    """Leaf means can never leave the convex hull of the training targets."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 5, size=(n, 2))
    y = rng.normal(0, 3, size=n)
    tree = grown(X, y, min_leaf=min_leaf)
    queries = rng.uniform(-2, 7, size=(20, 2))
    predictions = cart_predict_batch(tree, queries)
    assert np.all(predictions >= y.min() - 1e-12)
    assert np.all(predictions <= y.max() + 1e-12)
    # and splitting never increased training SSE over the root leaf
    root_mse = float(np.mean((y - y.mean()) ** 2))
    assert mse(cart_predict_batch(tree, X), y) <= root_mse + 1e-12
