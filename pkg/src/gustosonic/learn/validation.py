"""Stratified k-fold cross-validation, randomized hyperparameter search and
the model comparison table."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DegenerateClasses, EmptySpace, InvalidK, TooFewSamples
from ..sensor_data import LABELS
from .baselines import ForestSpec, GBTSpec, KNNSpec, TreeSpec
from .forest import ForestParams
from .metrics import MetricsReport, compute_metrics
from .tree import TreeParams, check_xy


def stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold id per sample.

    Each class is shuffled and dealt round-robin, continuing the deal from
    where the previous class stopped. Per-class fold counts therefore differ
    by at most one, and so do total fold sizes.
    """
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in range(len(LABELS)):
        idx = rng.permutation(np.flatnonzero(y == c))
        folds[idx] = (offset + np.arange(len(idx))) % k
        offset += len(idx)
    return folds


@dataclass
class CVReport:
    k: int
    per_fold: list[MetricsReport]
    mean_f1: float
    fold_assignment: np.ndarray
    predictions: np.ndarray
    """Out-of-fold prediction for every sample."""
    pooled: MetricsReport
    """Metrics over all out-of-fold predictions at once."""
    model_name: str = ""

    @property
    def fold_f1(self) -> list[float]:
        return [r.macro_f1 for r in self.per_fold]


def _check_cv_inputs(X, y, k):
    X, y = check_xy(X, y)
    if k < 2:
        raise InvalidK(f"k must be >= 2, got {k}")
    if len(y) < k:
        raise TooFewSamples(f"{len(y)} samples cannot fill {k} folds")
    if len(np.unique(y)) < 2:
        raise DegenerateClasses("training requires at least two classes")
    return X, y


def cross_validate(X, y, spec=None, k: int = 10, seed: int = 0) -> CVReport:
    """Train on k-1 folds, score the held-out fold, for every fold.

    ``mean_f1`` is the mean of the per-fold macro F1 scores.
    """
    spec = spec if spec is not None else ForestSpec()
    X, y = _check_cv_inputs(X, y, k)
    folds = stratified_folds(y, k, seed)
    predictions = np.empty(len(y), dtype=np.int64)
    per_fold = []
    for f in range(k):
        test = folds == f
        fitted = spec.fit(X[~test], y[~test])
        pred = fitted.predict_labels(X[test])
        predictions[test] = pred
        per_fold.append(compute_metrics(y[test], pred))
    return CVReport(
        k=k,
        per_fold=per_fold,
        mean_f1=float(np.mean([r.macro_f1 for r in per_fold])),
        fold_assignment=folds,
        predictions=predictions,
        pooled=compute_metrics(y, predictions),
        model_name=getattr(spec, "name", type(spec).__name__),
    )


@dataclass(frozen=True)
class SearchSpace:
    """Candidate values per hyperparameter. ``None`` in ``max_depth`` means
    unlimited; in ``max_features`` it means ceil(sqrt(n_features))."""

    n_trees: tuple = (25, 50, 100, 150)
    max_depth: tuple = (None, 8, 12, 16)
    min_samples_split: tuple = (2, 4, 8)
    max_features: tuple = (None, 4, 10, 14)
    n_iters: int = 10
    seed: int = 0

    def axes(self) -> list[tuple]:
        return [tuple(self.n_trees), tuple(self.max_depth), tuple(self.min_samples_split),
                tuple(self.max_features)]

    def size(self) -> int:
        return math.prod(len(a) for a in self.axes())

    def config_at(self, flat: int, base: ForestParams) -> ForestParams:
        values = []
        for axis in reversed(self.axes()):
            flat, r = divmod(flat, len(axis))
            values.append(axis[r])
        n_trees, max_depth, min_split, max_feat = reversed(values)
        return replace(base, n_trees=int(n_trees),
                       tree=TreeParams(max_depth=max_depth, min_samples_split=int(min_split),
                                       max_features=max_feat))


@dataclass
class Trial:
    params: ForestParams
    mean_f1: float
    fold_f1: list[float]
    source: str
    """"default" for the incumbent configuration, "sampled" otherwise."""


@dataclass
class SearchResult:
    best_params: ForestParams
    best_mean_f1: float
    trials: list[Trial] = field(default_factory=list)

    def log_csv(self) -> str:
        lines = ["trial,source,n_trees,max_depth,min_samples_split,max_features,mean_f1"]
        for i, t in enumerate(self.trials):
            tp = t.params.tree
            lines.append(",".join(str(v) for v in (
                i, t.source, t.params.n_trees, "" if tp.max_depth is None else tp.max_depth,
                tp.min_samples_split, "" if tp.max_features is None else tp.max_features,
                repr(float(t.mean_f1)))))
        return "\n".join(lines) + "\n"


def sample_configs(space: SearchSpace, base: ForestParams = ForestParams()) -> list[ForestParams]:
    """Up to ``n_iters`` distinct configurations drawn uniformly from the grid."""
    total = space.size()
    if total == 0:
        raise EmptySpace("search space has an empty axis")
    if space.n_iters < 1:
        raise EmptySpace("n_iters must be >= 1")
    rng = np.random.default_rng(space.seed)
    picks = rng.choice(total, size=min(space.n_iters, total), replace=False)
    return [space.config_at(int(i), base) for i in picks]


def randomized_search(X, y, space: SearchSpace = SearchSpace(), k: int = 10, seed: int = 0,
                      base_params: ForestParams = ForestParams(), include_default: bool = True) -> SearchResult:
    """Score sampled forest configurations by k-fold CV on shared folds.

    With ``include_default`` the ``base_params`` configuration is scored
    first as the incumbent, so the result never falls below it. Ties keep
    the earliest trial.
    """
    X, y = _check_cv_inputs(X, y, k)
    candidates = sample_configs(space, base_params)
    if include_default:
        candidates = [base_params] + [c for c in candidates if c != base_params]

    trials = []
    for i, params in enumerate(candidates):
        report = cross_validate(X, y, ForestSpec(params), k=k, seed=seed)
        source = "default" if include_default and i == 0 else "sampled"
        trials.append(Trial(params, report.mean_f1, report.fold_f1, source))

    best = max(range(len(trials)), key=lambda i: (trials[i].mean_f1, -i))
    return SearchResult(trials[best].params, trials[best].mean_f1, trials)


def baseline_specs(seed: int = 0) -> list:
    return [
        TreeSpec(seed=seed),
        ForestSpec(ForestParams(seed=seed)),
        KNNSpec(k=5),
        GBTSpec(),
    ]


def train_baselines(X, y, k: int = 10, seed: int = 0, specs=None) -> list[tuple[str, float]]:
    """``(model name, mean F1)`` for every comparison model, best first."""
    X, y = _check_cv_inputs(X, y, k)
    specs = specs if specs is not None else baseline_specs(seed)
    rows = [(spec.name, cross_validate(X, y, spec, k=k, seed=seed).mean_f1) for spec in specs]
    return sorted(rows, key=lambda r: -r[1])


def comparison_csv(rows: list[tuple[str, float]]) -> str:
    return "model,mean_f1\n" + "".join(f"{name},{f1:.6f}\n" for name, f1 in rows)


def all_configs(space: SearchSpace, base: ForestParams = ForestParams()) -> list[ForestParams]:
    return [space.config_at(i, base) for i in range(space.size())]
