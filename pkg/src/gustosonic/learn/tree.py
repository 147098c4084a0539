"""CART classification tree (Gini impurity, axis-aligned binary splits).

Trees are stored as flat node arrays so that batch prediction is a handful of
vectorised gathers per depth level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyData, SchemaMismatch
from ..sensor_data import LABELS

N_CLASSES = len(LABELS)
LEAF = -1


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    """None means grow until pure or too small to split."""
    min_samples_split: int = 2
    max_features: int | None = None
    """Candidate features per split; None means ceil(sqrt(n_features))."""

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be >= 1")

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features is None:
            return max(1, math.ceil(math.sqrt(n_features)))
        if self.max_features > n_features:
            raise ValueError(f"max_features={self.max_features} exceeds n_features={n_features}")
        return self.max_features


class DecisionTree:
    """A trained tree. Node ``i`` is a leaf when ``feature[i] == LEAF``."""

    def __init__(self, feature, threshold, left, right, value, n_features: int):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.int64)
        self.n_features = n_features

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict_indices(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] != LEAF
        while active.any():
            n = node[active]
            go_left = X[rows[active], self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return self.value[node]

    # nested dict form used by the model document
    def to_dict(self, i: int = 0) -> dict:
        if self.feature[i] == LEAF:
            return {"leaf": LABELS[self.value[i]].value}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "left": self.to_dict(int(self.left[i])),
            "right": self.to_dict(int(self.right[i])),
        }

    @classmethod
    def from_dict(cls, doc: dict, n_features: int) -> "DecisionTree":
        from ..sensor_data import ActivityLabel

        feature, threshold, left, right, value = [], [], [], [], []

        def add(node) -> int:
            i = len(feature)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(0)
            if "leaf" in node:
                value[i] = ActivityLabel.parse(node["leaf"]).index
                return i
            f = int(node["feature"])
            if not 0 <= f < n_features:
                raise SchemaMismatch(f"split feature {f} outside schema of {n_features}")
            feature[i] = f
            threshold[i] = float(node["threshold"])
            left[i] = add(node["left"])
            right[i] = add(node["right"])
            return i

        add(doc)
        return cls(feature, threshold, left, right, value, n_features)


def as_label_indices(y) -> np.ndarray:
    y = list(y) if not isinstance(y, np.ndarray) else y
    if len(y) and not isinstance(y, np.ndarray) and hasattr(y[0], "index") and not isinstance(y[0], int):
        return np.array([lab.index for lab in y], dtype=np.int64)
    return np.asarray(y, dtype=np.int64)


def check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = as_label_indices(y)
    if X.ndim != 2 or len(X) == 0:
        raise EmptyData("training data is empty")
    if len(y) != len(X):
        raise SchemaMismatch(f"{len(X)} feature rows but {len(y)} labels")
    if not np.isfinite(X).all():
        raise SchemaMismatch("non-finite feature values")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise SchemaMismatch("label index out of range")
    return X, y


def _best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Best Gini split over ``features`` for the rows in ``X``/``y``.

    Returns ``(feature, threshold)`` or None when every candidate feature is
    constant. Minimising weighted Gini is the same as maximising
    ``sum(left_counts**2)/n_left + sum(right_counts**2)/n_right``.
    """
    n = len(y)
    sub = X[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    onehot = np.eye(N_CLASSES)[y[order]]  # (n, m, C)
    left = np.cumsum(onehot, axis=0)[:-1]  # left side holds rows [0, i]
    total = left[-1] + onehot[-1]
    right = total - left
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    score = (left * left).sum(axis=2) / n_left + (right * right).sum(axis=2) / (n - n_left)
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    pos, j = np.unravel_index(int(np.argmax(score)), score.shape)
    lo, hi = xs[pos, j], xs[pos + 1, j]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(features[j]), float(thr)


def train_tree(X, y, params: TreeParams = TreeParams(), rng: np.random.Generator | int | None = 0) -> DecisionTree:
    """Grow a tree greedily, depth first.

    At each node ``max_features`` candidate features are drawn without
    replacement from ``rng``. Growth stops at ``max_depth``, at nodes with
    fewer than ``min_samples_split`` rows, and at pure nodes. Leaves predict
    the modal class, ties going to the earliest label.
    """
    X, y = check_xy(X, y)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n_features = X.shape[1]
    m = params.resolve_max_features(n_features)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(int(np.argmax(np.bincount(y[rows], minlength=N_CLASSES))))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        ys = y[rows]
        if (
            (params.max_depth is not None and depth >= params.max_depth)
            or len(rows) < params.min_samples_split
            or (ys == ys[0]).all()
        ):
            continue
        feats = rng.choice(n_features, size=m, replace=False) if m < n_features else np.arange(n_features)
        split = _best_split(X[rows], ys, feats)
        if split is None:
            continue
        f, thr = split
        mask = X[rows, f] <= thr
        li, ri = rows[mask], rows[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return DecisionTree(feature, threshold, left, right, value, n_features)
