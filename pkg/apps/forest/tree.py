"""
Regression trees stored as flat node arrays.

Node ``i`` is a leaf when ``left[i] == -1``; otherwise rows with
``x[feature[i]] <= threshold[i]`` go to ``left[i]`` and the rest to
``right[i]``. Every tree, whichever engine grew it, is predicted and
persisted through this one representation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from apps.core.exceptions import DimensionError

LEAF = -1


@dataclass(frozen=True, eq=False)
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int

    def __post_init__(self) -> None:
        arrays = {
            'feature': np.asarray(self.feature, dtype=np.int64),
            'threshold': np.asarray(self.threshold, dtype=np.float64),
            'left': np.asarray(self.left, dtype=np.int64),
            'right': np.asarray(self.right, dtype=np.int64),
            'value': np.asarray(self.value, dtype=np.float64),
        }
        sizes = {a.shape for a in arrays.values()}
        if len(sizes) != 1 or arrays['value'].ndim != 1 or arrays['value'].size == 0:
            raise DimensionError(f"Node arrays must be 1-D and equally long, got shapes {sorted(sizes)}")
        if not np.isfinite(arrays['value']).all():
            raise ValidationError("Leaf values must be finite")
        internal = arrays['left'] != LEAF
        n_nodes = arrays['value'].size
        for name in ('left', 'right'):
            children = arrays[name][internal]
            if ((children <= 0) | (children >= n_nodes)).any():
                raise ValidationError(f"Tree has out-of-range {name} child indices")
        if (arrays['right'][internal] == LEAF).any() or (arrays['right'][~internal] != LEAF).any():
            raise ValidationError("Every internal node needs two children")
        if ((arrays['feature'][internal] < 0) | (arrays['feature'][internal] >= self.n_features)).any():
            raise ValidationError("Tree splits on a feature index out of range")
        for name, array in arrays.items():
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def node_count(self) -> int:
        return self.value.size

    def is_leaf(self, node: int = 0) -> bool:
        return self.left[node] == LEAF

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if not self.is_leaf(node):
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionError(f"Tree expects {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.left[node] != LEAF
        while active.any():
            r, n = rows[active], node[active]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = self.left[node] != LEAF
        return self.value[node]

    @classmethod
    def from_sklearn(cls, estimator) -> RegressionTree:
        """Convert a fitted ``DecisionTreeRegressor`` to node arrays."""
        tree = estimator.tree_
        leaf = tree.children_left == -1
        return cls(
            feature=np.where(leaf, LEAF, tree.feature),
            threshold=np.where(leaf, 0.0, tree.threshold),
            left=tree.children_left,
            right=tree.children_right,
            value=tree.value[:, 0, 0],
            n_features=estimator.n_features_in_,
        )

    def to_dict(self) -> dict:
        return {
            'feature': self.feature.tolist(),
            'threshold': self.threshold.tolist(),
            'left': self.left.tolist(),
            'right': self.right.tolist(),
            'value': self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, n_features: int) -> RegressionTree:
        return cls(
            feature=data['feature'],
            threshold=data['threshold'],
            left=data['left'],
            right=data['right'],
            value=data['value'],
            n_features=n_features,
        )


def _best_split(X: np.ndarray, t: np.ndarray, features: np.ndarray, min_leaf: int):
    """
    Lowest-SSE split over ``features`` (sorted ascending).

    Returns (feature, threshold, sse) or None. Thresholds are midpoints
    between consecutive distinct values; ties go to the lowest feature
    index, then to the lowest threshold.
    """
    n = t.size
    if n < 2 * min_leaf:
        return None
    Xf = X[:, features]
    order = np.argsort(Xf, axis=0, kind='stable')
    xs = np.take_along_axis(Xf, order, axis=0)
    ts = t[order]

    left_sum = np.cumsum(ts, axis=0)[:-1]
    left_sq = np.cumsum(ts * ts, axis=0)[:-1]
    total_sum = ts.sum(axis=0)
    total_sq = (ts * ts).sum(axis=0)
    k = np.arange(1, n, dtype=np.float64)[:, None]
    sse = (left_sq - left_sum ** 2 / k) + ((total_sq - left_sq) - (total_sum - left_sum) ** 2 / (n - k))

    valid = (xs[1:] > xs[:-1]) & (k >= min_leaf) & (n - k >= min_leaf)
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    # Feature-major flattening makes argmin prefer low features, then low thresholds.
    flat = int(np.argmin(sse.T.ravel()))
    column, position = divmod(flat, n - 1)
    threshold = 0.5 * (xs[position, column] + xs[position + 1, column])
    return int(features[column]), float(threshold), float(sse[position, column])


def n_split_features(max_features: float | int | None, n_features: int) -> int:
    """Number of features examined per split."""
    if max_features is None:
        return n_features
    if isinstance(max_features, float):
        return max(1, min(n_features, int(max_features * n_features)))
    return max(1, min(n_features, int(max_features)))


def fit_tree(X, t, max_depth: int | None = None, min_leaf: int = 1,
             max_features: float | int | None = None, rng: np.random.Generator | None = None) -> RegressionTree:
    """
    Grow a CART regression tree by greedy variance reduction.

    Args:
        X: N x d feature matrix.
        t: N targets.
        max_depth: depth limit; ``None`` grows until leaves are pure or
            cannot be split.
        min_leaf: minimum rows per leaf.
        max_features: features examined per split (fraction, count, or
            ``None`` for all).
        rng: source of the per-split feature subsets.
    """
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if X.ndim != 2 or t.ndim != 1 or X.shape[0] != t.size:
        raise DimensionError(f"Features {X.shape} and targets {t.shape} do not match")
    if t.size == 0:
        raise ValidationError("Cannot fit a tree on zero rows")
    if max_depth is not None and max_depth < 0:
        raise ValidationError(f"max_depth must be >= 0, got {max_depth}")
    if min_leaf < 1:
        raise ValidationError(f"min_leaf must be >= 1, got {min_leaf}")
    rng = rng if rng is not None else np.random.default_rng(0)
    d = X.shape[1]
    n_try = n_split_features(max_features, d)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node() -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(0.0)
        return len(value) - 1

    stack = [(new_node(), np.arange(t.size), 0)]
    while stack:
        node, rows, depth = stack.pop()
        targets = t[rows]
        if np.all(targets == targets[0]):
            value[node] = float(targets[0])
            continue
        value[node] = float(targets.mean())
        if max_depth is not None and depth >= max_depth:
            continue
        features = np.arange(d) if n_try == d else np.sort(rng.choice(d, size=n_try, replace=False))
        split = _best_split(X[rows], targets, features, min_leaf)
        if split is None:
            continue
        f, thr, _ = split
        mask = X[rows, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(), new_node()
        # Right first so the left subtree is expanded (and numbered) first.
        stack.append((right[node], rows[~mask], depth + 1))
        stack.append((left[node], rows[mask], depth + 1))

    return RegressionTree(
        feature=feature, threshold=threshold, left=left, right=right, value=value, n_features=d,
    )
