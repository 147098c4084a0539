"""Random forest: bagged CART trees with per-split feature subsampling."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import SchemaMismatch
from ..featurize import FEATURE_NAMES
from ..sensor_data import LABELS, ActivityLabel
from .tree import N_CLASSES, DecisionTree, TreeParams, check_xy, train_tree


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    tree: TreeParams = field(default_factory=TreeParams)
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ForestParams":
        return cls(n_trees=int(d["n_trees"]), tree=TreeParams(**d["tree"]),
                   bootstrap=bool(d["bootstrap"]), seed=int(d["seed"]))


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for tree ``index`` of a forest seeded with ``seed``.

    Derived per tree so trees can be trained in any order or in parallel.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def fingerprint(X: np.ndarray, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(y, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


def vote(tree_predictions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Majority vote over an (n_trees, n_samples) array of label indices.

    Returns ``(winner, vote_fraction)``; ties go to the earliest label.
    """
    n_trees, n = tree_predictions.shape
    counts = np.zeros((n, N_CLASSES), dtype=np.int64)
    for row in tree_predictions:
        counts[np.arange(n), row] += 1
    winner = np.argmax(counts, axis=1)
    return winner, counts[np.arange(n), winner] / n_trees


class RandomForestModel:
    """An immutable trained forest."""

    def __init__(self, trees: list[DecisionTree], params: ForestParams,
                 feature_schema: tuple[str, ...] = FEATURE_NAMES, train_meta: dict | None = None):
        if not trees:
            raise ValueError("a forest needs at least one tree")
        if any(t.n_features != len(feature_schema) for t in trees):
            raise SchemaMismatch("tree width does not match feature schema")
        self._trees = tuple(trees)
        self.params = params
        self.feature_schema = tuple(feature_schema)
        self.train_meta = dict(train_meta or {})
        self.classes = LABELS

    @property
    def trees(self) -> tuple[DecisionTree, ...]:
        return self._trees

    @property
    def n_features(self) -> int:
        return len(self.feature_schema)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def tree_votes(self, X) -> np.ndarray:
        X = self._check(X)
        return np.stack([t.predict_indices(X) for t in self._trees])

    def predict_indices(self, X) -> tuple[np.ndarray, np.ndarray]:
        return vote(self.tree_votes(X))

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        return self.predict_indices(X)

    def predict(self, x) -> tuple[ActivityLabel, float]:
        """Label and winning vote fraction for a single feature vector."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise SchemaMismatch("predict takes one feature vector; use predict_indices for batches")
        idx, conf = self.predict_indices(x)
        return LABELS[int(idx[0])], float(conf[0])


def train_forest(X, y, params: ForestParams = ForestParams(),
                 feature_schema: tuple[str, ...] | None = None, extra_meta: dict | None = None) -> RandomForestModel:
    X, y = check_xy(X, y)
    schema = tuple(feature_schema) if feature_schema is not None else (
        FEATURE_NAMES if X.shape[1] == len(FEATURE_NAMES) else tuple(f"f{i}" for i in range(X.shape[1])))
    if len(schema) != X.shape[1]:
        raise SchemaMismatch(f"schema names {len(schema)} features, data has {X.shape[1]}")
    n = len(y)
    trees = []
    for i in range(params.n_trees):
        rng = tree_rng(params.seed, i)
        if params.bootstrap:
            rows = rng.integers(0, n, size=n)
            trees.append(train_tree(X[rows], y[rows], params.tree, rng))
        else:
            trees.append(train_tree(X, y, params.tree, rng))
    meta = {"params": params.to_dict(), "seed": params.seed, "n_train": n, "data_fingerprint": fingerprint(X, y)}
    meta.update(extra_meta or {})
    return RandomForestModel(trees, params, schema, meta)
