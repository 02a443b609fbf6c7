"""Random forest of CART trees with fully reproducible training.

Each tree draws a bootstrap sample and per-node feature subsets from its
own generator seeded by (run seed, tree index), so trees can be trained in
any order (or in parallel) with identical results. Splits minimize Gini
impurity with midpoint thresholds; exact ties go to the lowest feature
index and then the lowest threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteInputError, SingleClassError

DEFAULT_N_TREES = 300
DEFAULT_MIN_SAMPLES_LEAF = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = DEFAULT_N_TREES
    max_features: int | None = None  # None -> floor(sqrt(n_features))
    min_samples_leaf: int = DEFAULT_MIN_SAMPLES_LEAF

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features is not None:
            return max(1, min(int(self.max_features), n_features))
        return max(1, min(int(math.floor(math.sqrt(n_features))), n_features))


@dataclass
class TreeNode:
    """CART node; feature < 0 marks a leaf. Counts are kept everywhere so
    importances can be recomputed from a serialized tree."""

    n_pos: int
    n_neg: int
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    @property
    def n_samples(self) -> int:
        return self.n_pos + self.n_neg


@dataclass
class RandomForestModel:
    trees: list[TreeNode]
    params: ForestParams
    seed: int
    n_features: int
    feature_names: tuple[str, ...] | None = None
    schema_fingerprint: str | None = None
    oob_note: str = field(default="", repr=False)


def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best Gini split over the given candidate columns.

    Returns (column, threshold) or None. Candidates must be ordered by
    ascending absolute feature index so the tie rule falls out of scan
    order.
    """
    n = X.shape[0]
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    pos_left = np.cumsum(ys, axis=0)[:-1]
    n_left = np.arange(1, n, dtype=np.int64)[:, None]
    n_right = n - n_left
    total_pos = int(y.sum())
    neg_left = n_left - pos_left
    pos_right = total_pos - pos_left
    neg_right = n_right - pos_right
    # Weighted child impurity, up to the constant factor 2/n.
    weighted = pos_left * neg_left / n_left + pos_right * neg_right / n_right
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    weighted = np.where(valid, weighted, np.inf)
    best = weighted.min()
    if not np.isfinite(best):
        return None
    col = int(np.argmax((weighted == best).any(axis=0)))
    row = int(np.argmax(weighted[:, col] == best))
    threshold = 0.5 * (xs[row, col] + xs[row + 1, col])
    return col, float(threshold)


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_features: int,
    min_leaf: int,
    rng: np.random.Generator,
) -> TreeNode:
    n, d = X.shape
    boot = rng.integers(0, n, size=n)
    Xb = X[boot]
    yb = y[boot]

    def node_for(idx: np.ndarray) -> TreeNode:
        pos = int(yb[idx].sum())
        return TreeNode(n_pos=pos, n_neg=idx.size - pos)

    root = node_for(np.arange(n))
    stack: list[tuple[TreeNode, np.ndarray]] = [(root, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        if node.n_pos == 0 or node.n_neg == 0 or idx.size < 2 * min_leaf:
            continue
        feats = np.sort(rng.choice(d, size=min(max_features, d), replace=False))
        found = _best_split(Xb[idx][:, feats], yb[idx], min_leaf)
        if found is None:
            continue
        col, threshold = found
        node.feature = int(feats[col])
        node.threshold = threshold
        go_left = Xb[idx, node.feature] <= threshold
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        node.left = node_for(left_idx)
        node.right = node_for(right_idx)
        stack.append((node.right, right_idx))
        stack.append((node.left, left_idx))
    return root


def train_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams = ForestParams(),
    seed: int = 0,
    feature_names: tuple[str, ...] | None = None,
) -> RandomForestModel:
    """Fit the forest. y holds binary labels (0/1); both classes required."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be (n, d) with one label per row")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInputError("training matrix contains NaN or Inf")
    if len(np.unique(y)) < 2:
        raise SingleClassError("training labels contain a single class")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length must match n_features")
    max_features = params.resolve_max_features(X.shape[1])
    trees = [
        _grow_tree(
            X,
            y,
            max_features,
            params.min_samples_leaf,
            np.random.default_rng([int(seed), t]),
        )
        for t in range(params.n_trees)
    ]
    return RandomForestModel(
        trees=trees,
        params=params,
        seed=int(seed),
        n_features=X.shape[1],
        feature_names=tuple(feature_names) if feature_names else None,
    )


def _tree_positive_fraction(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    stack: list[tuple[TreeNode, np.ndarray]] = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.n_pos / node.n_samples
            continue
        go_left = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return out


def rf_predict_matrix(model: RandomForestModel, X: np.ndarray) -> np.ndarray:
    """Positive-class probability per row: mean leaf fraction over trees."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"X must be (n, {model.n_features})")
    scores = np.zeros(X.shape[0])
    for tree in model.trees:
        scores += _tree_positive_fraction(tree, X)
    return scores / len(model.trees)


def rf_predict_proba(model: RandomForestModel, x: np.ndarray) -> float:
    return float(rf_predict_matrix(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def _gini(n_pos: int, n_neg: int) -> float:
    n = n_pos + n_neg
    if n == 0:
        return 0.0
    return 2.0 * n_pos * n_neg / (n * n)


def rf_feature_importance(model: RandomForestModel) -> list[tuple[str, float]]:
    """Mean decrease in Gini impurity, normalized to sum 1, ranked descending.

    Ties keep ascending feature-index order (stable sort on the negated
    importances).
    """
    importances = np.zeros(model.n_features)
    for tree in model.trees:
        root_n = tree.n_samples
        stack = [tree]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                continue
            n = node.n_samples
            decrease = _gini(node.n_pos, node.n_neg) - (
                node.left.n_samples * _gini(node.left.n_pos, node.left.n_neg)
                + node.right.n_samples * _gini(node.right.n_pos, node.right.n_neg)
            ) / n
            importances[node.feature] += (n / root_n) * decrease
            stack.append(node.left)
            stack.append(node.right)
    importances /= len(model.trees)
    total = importances.sum()
    if total > 0.0:
        importances /= total
    names = model.feature_names or tuple(
        f"f{i:04d}" for i in range(model.n_features)
    )
    order = np.argsort(-importances, kind="stable")
    return [(names[i], float(importances[i])) for i in order]
