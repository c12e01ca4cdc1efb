"""CART regression trees: greedy variance-reduction splitting, no pruning.

Each internal node tests one feature against a threshold placed at the
midpoint between consecutive sorted unique values; the split chosen is the
one that maximally reduces the total squared error (SSE) of the targets.
Leaves predict the mean target of their samples.  Ties between equal-gain
splits break toward the lowest feature index, then the smallest threshold,
so the fitted tree does not depend on training-row order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset

_LEAF = -1


@dataclass(frozen=True)
class CartParams:
    min_leaf: int = 5
    max_depth: int = 30
    min_impurity_decrease: float = 0.0  # absolute SSE reduction required to split

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if not self.min_impurity_decrease >= 0:
            raise ValueError(
                f"min_impurity_decrease must be >= 0, got {self.min_impurity_decrease}"
            )


@dataclass(frozen=True)
class TreeNode:
    """Either an internal split (split_dim >= 0) or a leaf (split_dim == -1).

    Every node carries the mean target and sample count of the rows it
    covers; for leaves the mean is the prediction.
    """

    split_dim: int
    split_threshold: float
    left: int  # child indices into RegressionTree.nodes; -1 for leaves
    right: int
    mean_target: float
    count: int

    @property
    def is_leaf(self) -> bool:
        return self.split_dim == _LEAF


@dataclass(frozen=True)
class RegressionTree:
    nodes: tuple[TreeNode, ...]  # preorder: node, left subtree, right subtree
    params: CartParams
    input_dim: int

    @property
    def depth(self) -> int:
        def walk(i: int) -> int:
            node = self.nodes[i]
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(0)

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.nodes if n.is_leaf]


def cart_fit(dataset: Dataset, params: CartParams = CartParams()) -> RegressionTree:
    """Grow a tree top-down; stops on min_leaf, max_depth, or zero gain."""
    X, y = dataset.X, dataset.y
    nodes: list[TreeNode | None] = []

    def build(idx: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append(None)
        targets = y[idx]
        mean = float(targets.mean())
        sse = float(((targets - mean) ** 2).sum())
        split = None
        if depth < params.max_depth and idx.size >= 2 * params.min_leaf and sse > 0.0:
            split = _best_split(X, y, idx, params, sse)
        if split is None:
            nodes[node_id] = TreeNode(_LEAF, 0.0, -1, -1, mean, int(idx.size))
            return node_id
        dim, threshold = split
        go_left = X[idx, dim] <= threshold
        left_id = build(idx[go_left], depth + 1)
        right_id = build(idx[~go_left], depth + 1)
        nodes[node_id] = TreeNode(dim, threshold, left_id, right_id, mean, int(idx.size))
        return node_id

    build(np.arange(len(dataset)), 0)
    return RegressionTree(tuple(nodes), params, dataset.dim)


def _best_split(X, y, idx, params: CartParams, sse_parent: float):
    """Exhaustive scan over (dimension, midpoint threshold) candidates.

    Prefix sums of y and y^2 over the rows sorted by (feature, target)
    give each candidate's two-sided SSE in O(1); the (x, y) sort key makes
    the sums independent of the original row order.
    """
    n = idx.size
    best_gain = 0.0
    best = None
    for dim in range(X.shape[1]):
        values = X[idx, dim]
        order = np.lexsort((y[idx], values))
        xs = values[order]
        ys = y[idx][order]
        if xs[0] == xs[-1]:
            continue
        cum1 = np.cumsum(ys)
        cum2 = np.cumsum(ys * ys)
        left_counts = np.arange(1, n)
        valid = (
            (xs[:-1] != xs[1:])
            & (left_counts >= params.min_leaf)
            & (n - left_counts >= params.min_leaf)
        )
        if not np.any(valid):
            continue
        counts = left_counts[valid]
        s1, s2 = cum1[counts - 1], cum2[counts - 1]
        sse_left = s2 - s1 * s1 / counts
        sse_right = (cum2[-1] - s2) - (cum1[-1] - s1) ** 2 / (n - counts)
        gains = sse_parent - sse_left - sse_right
        k = int(np.argmax(gains))  # first maximum = smallest threshold
        if gains[k] > best_gain:  # strict: earlier dims win ties
            best_gain = float(gains[k])
            pos = counts[k]
            best = (dim, float((xs[pos - 1] + xs[pos]) / 2.0))
    if best is None or best_gain < params.min_impurity_decrease:
        return None
    return best


def cart_predict(tree: RegressionTree, x) -> float:
    """Route one input to its leaf; left branch when x[dim] <= threshold."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (tree.input_dim,):
        raise ValueError(
            f"input has shape {x.shape}, tree expects ({tree.input_dim},)"
        )
    node = tree.nodes[0]
    while not node.is_leaf:
        node = tree.nodes[node.left if x[node.split_dim] <= node.split_threshold else node.right]
    return node.mean_target


def cart_predict_batch(tree: RegressionTree, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != tree.input_dim:
        raise ValueError(f"inputs must have shape (M, {tree.input_dim}), got {X.shape}")
    return np.array([cart_predict(tree, row) for row in X])


def tree_to_dict(tree: RegressionTree) -> dict:
    nodes = []
    for node in tree.nodes:
        if node.is_leaf:
            nodes.append({"type": "leaf", "mean_target": node.mean_target, "count": node.count})
        else:
            nodes.append(
                {
                    "type": "split",
                    "split_dim": node.split_dim,
                    "split_threshold": node.split_threshold,
                    "left": node.left,
                    "right": node.right,
                    "count": node.count,
                }
            )
    return {
        "input_dim": tree.input_dim,
        "params": {
            "min_leaf": tree.params.min_leaf,
            "max_depth": tree.params.max_depth,
            "min_impurity_decrease": tree.params.min_impurity_decrease,
        },
        "nodes": nodes,
    }


def save_tree(tree: RegressionTree, path: str | Path) -> None:
    Path(path).write_text(json.dumps(tree_to_dict(tree), indent=2, sort_keys=True) + "\n")
