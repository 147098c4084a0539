"""Trees, forests, baselines, metrics and model selection."""

from .baselines import ForestSpec, GBTSpec, GradientBoostedTrees, KNearestNeighbors, KNNSpec, TreeSpec
from .forest import ForestParams, RandomForestModel, train_forest, tree_rng, vote
from .metrics import ClassScores, MetricsReport, compute_metrics, confusion_matrix
from .serialization import FORMAT_VERSION, dumps, load_model, loads, save_model
from .tree import DecisionTree, TreeParams, train_tree
from .validation import (
    CVReport,
    SearchResult,
    SearchSpace,
    comparison_csv,
    cross_validate,
    randomized_search,
    stratified_folds,
    train_baselines,
)

__all__ = [
    "CVReport", "ClassScores", "DecisionTree", "FORMAT_VERSION", "ForestParams", "ForestSpec", "GBTSpec",
    "GradientBoostedTrees", "KNNSpec", "KNearestNeighbors", "MetricsReport", "RandomForestModel",
    "SearchResult", "SearchSpace", "TreeParams", "TreeSpec", "comparison_csv", "compute_metrics",
    "confusion_matrix", "cross_validate", "dumps", "load_model", "loads", "randomized_search", "save_model",
    "stratified_folds", "train_baselines", "train_forest", "train_tree", "tree_rng", "vote",
]
