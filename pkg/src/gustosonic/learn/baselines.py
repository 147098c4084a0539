"""Comparison models and the ``ModelSpec`` interface used by the CV harness.

A spec is a recipe: ``spec.fit(X, y)`` returns a fitted object exposing
``predict_labels(X) -> ndarray`` of label indices. Specs carry their own
seed, so fitting is a pure function of the training data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forest import ForestParams, RandomForestModel, train_forest
from .tree import N_CLASSES, DecisionTree, TreeParams, check_xy, train_tree


class _ForestPredictor:
    def __init__(self, model: RandomForestModel):
        self.model = model

    def predict_labels(self, X) -> np.ndarray:
        return self.model.predict_indices(X)[0]


class _TreePredictor:
    def __init__(self, tree: DecisionTree):
        self.tree = tree

    def predict_labels(self, X) -> np.ndarray:
        return self.tree.predict_indices(X)


@dataclass(frozen=True)
class ForestSpec:
    params: ForestParams = field(default_factory=ForestParams)
    name: str = "random_forest"

    def fit(self, X, y):
        return _ForestPredictor(train_forest(X, y, self.params))


@dataclass(frozen=True)
class TreeSpec:
    """Single unpruned CART tree considering every feature at each split."""

    max_depth: int | None = None
    min_samples_split: int = 2
    seed: int = 0
    name: str = "decision_tree"

    def fit(self, X, y):
        X, y = check_xy(X, y)
        params = TreeParams(self.max_depth, self.min_samples_split, max_features=X.shape[1])
        return _TreePredictor(train_tree(X, y, params, self.seed))


class KNearestNeighbors:
    """k-NN with Euclidean distance on z-scored features.

    Standardisation uses training statistics only; constant features are
    left unscaled. Vote ties go to the earliest label.
    """

    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, X, y) -> "KNearestNeighbors":
        X, y = check_xy(X, y)
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        self.X_ = (X - self.mean_) / self.scale_
        self.y_ = y
        return self

    def predict_labels(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_
        d2 = (Z * Z).sum(1)[:, None] - 2 * Z @ self.X_.T + (self.X_ * self.X_).sum(1)[None, :]
        k = min(self.k, len(self.y_))
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        counts = np.zeros((len(Z), N_CLASSES), dtype=np.int64)
        for j in range(k):
            counts[np.arange(len(Z)), self.y_[nearest[:, j]]] += 1
        return np.argmax(counts, axis=1)


@dataclass(frozen=True)
class KNNSpec:
    k: int = 5
    name: str = "knn"

    def fit(self, X, y):
        return KNearestNeighbors(self.k).fit(X, y)


def _regression_tree(X, order, grad, hess, max_depth, min_leaf=1):
    """Shallow least-squares tree on gradients with Newton leaf values.

    ``order`` holds the per-feature argsort of ``X`` computed once per fit;
    node row sets are recovered from it by masking, so no node re-sorts.
    Returns (feature, threshold, left, right, leaf_value) node arrays.
    """
    n, d = X.shape
    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(mask):
        h = hess[mask].sum()
        return float(grad[mask].sum() / h) if h > 1e-12 else 0.0

    def grow(mask, depth):
        i = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(mask))
        m = int(mask.sum())
        if depth >= max_depth or m < 2 * min_leaf:
            return i
        node_order = order.T[mask[order.T]].reshape(d, m).T  # (m, d) sorted rows per feature
        xs = X[node_order, np.arange(d)]
        g = grad[node_order]
        gl = np.cumsum(g, axis=0)[:-1]
        gt = gl[-1] + g[-1]
        nl = np.arange(1, m, dtype=np.float64)[:, None]
        score = gl * gl / nl + (gt - gl) ** 2 / (m - nl)
        valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (m - nl >= min_leaf)
        if not valid.any():
            return i
        score = np.where(valid, score, -np.inf)
        pos, f = np.unravel_index(int(np.argmax(score)), score.shape)
        lo, hi = xs[pos, f], xs[pos + 1, f]
        thr = lo + (hi - lo) / 2.0
        if not lo <= thr < hi:
            thr = lo
        go_left = mask & (X[:, f] <= thr)
        feature[i], threshold[i] = int(f), float(thr)
        left[i] = grow(go_left, depth + 1)
        right[i] = grow(mask & ~go_left, depth + 1)
        return i

    grow(np.ones(n, dtype=bool), 0)
    return (np.array(feature), np.array(threshold), np.array(left), np.array(right), np.array(value))


def _apply_tree(tree, X):
    feature, threshold, left, right, value = tree
    node = np.zeros(len(X), dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        n = node[active]
        go = X[np.flatnonzero(active), feature[n]] <= threshold[n]
        node[active] = np.where(go, left[n], right[n])
        active = feature[node] >= 0
    return value[node]


class GradientBoostedTrees:
    """One-vs-rest logistic gradient boosting with shallow trees.

    A deliberately small stand-in for a production boosting library: fixed
    learning rate, no subsampling, no regularisation beyond depth.
    """

    def __init__(self, n_rounds: int = 30, max_depth: int = 3, learning_rate: float = 0.1):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate

    def fit(self, X, y) -> "GradientBoostedTrees":
        X, y = check_xy(X, y)
        order = np.argsort(X, axis=0, kind="stable")
        self.classes_ = np.unique(y)
        self.base_ = {}
        self.trees_ = {}
        for c in self.classes_:
            target = (y == c).astype(np.float64)
            prior = np.clip(target.mean(), 1e-6, 1 - 1e-6)
            f = np.full(len(y), np.log(prior / (1 - prior)))
            self.base_[c] = float(f[0])
            trees = []
            for _ in range(self.n_rounds):
                p = 1.0 / (1.0 + np.exp(-f))
                tree = _regression_tree(X, order, target - p, p * (1 - p), self.max_depth)
                f += self.learning_rate * _apply_tree(tree, X)
                trees.append(tree)
            self.trees_[c] = trees
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        scores = np.full((len(X), N_CLASSES), -np.inf)
        for c in self.classes_:
            f = np.full(len(X), self.base_[c])
            for tree in self.trees_[c]:
                f += self.learning_rate * _apply_tree(tree, X)
            scores[:, c] = f
        return scores

    def predict_labels(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)


@dataclass(frozen=True)
class GBTSpec:
    n_rounds: int = 30
    max_depth: int = 3
    learning_rate: float = 0.1
    name: str = "gradient_boosting"

    def fit(self, X, y):
        return GradientBoostedTrees(self.n_rounds, self.max_depth, self.learning_rate).fit(X, y)
