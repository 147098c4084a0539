import numpy as np
import pytest
from oracles import naive_majority

from gustosonic.errors import EmptyData, SchemaMismatch
from gustosonic.learn import (
    ForestParams,
    GradientBoostedTrees,
    KNearestNeighbors,
    TreeParams,
    compute_metrics,
    dumps,
    train_forest,
    train_tree,
    tree_rng,
    vote,
)
from gustosonic.learn.forest import RandomForestModel
from gustosonic.learn.tree import DecisionTree
from gustosonic.sensor_data import ActivityLabel

B = ActivityLabel.BEVERAGE.index


def test_single_class_gives_single_leaf():
    X = np.random.default_rng(0).normal(size=(30, 4))
    tree = train_tree(X, np.full(30, B))
    assert tree.node_count == 1
    assert (tree.predict_indices(X) == B).all()


def test_two_points_one_split():
    tree = train_tree([[0.0], [1.0]], [0, 1], TreeParams(max_depth=1))
    assert tree.node_count == 3
    assert tree.threshold[0] == 0.5
    assert list(tree.predict_indices([[0.0], [1.0]])) == [0, 1]


def test_threshold_separable_feature_3():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 8))
    y = (X[:, 3] > 0.2).astype(int)
    tree = train_tree(X, y, TreeParams(max_depth=None), rng=1)
    # exhaustive check over every training point
    assert all(tree.predict_indices(X[i])[0] == y[i] for i in range(200))
    # with every feature available the root split is the known threshold
    full = train_tree(X, y, TreeParams(max_features=8), rng=1)
    assert full.feature[0] == 3
    lo = X[y == 0, 3].max()
    hi = X[y == 1, 3].min()
    assert lo <= full.threshold[0] < hi
    assert full.node_count == 3


def test_max_depth_and_min_samples_split_respected():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 6))
    y = rng.integers(0, 5, 300)
    assert train_tree(X, y, TreeParams(max_depth=3), rng=0).depth() <= 3
    assert train_tree(X, y, TreeParams(min_samples_split=301), rng=0).node_count == 1
    # 300 rows may split once; both children are then too small
    assert train_tree(X, y, TreeParams(min_samples_split=300), rng=0).node_count == 3


def test_leaf_tie_break():
    # identical inputs, one of each label: no split possible, leaf takes earliest label
    tree = train_tree(np.zeros((2, 1)), [3, 1])
    assert tree.predict_indices([[0.0]])[0] == 1


def test_tree_errors():
    with pytest.raises(EmptyData):
        train_tree(np.empty((0, 3)), [])
    with pytest.raises(SchemaMismatch):
        train_tree(np.zeros((3, 2)), [0, 1])
    tree = train_tree(np.eye(3), [0, 1, 2])
    with pytest.raises(SchemaMismatch):
        tree.predict_indices(np.zeros((1, 4)))


def test_labels_accepted_as_enum():
    tree = train_tree([[0.0], [1.0]], [ActivityLabel.SOFT_FOOD, ActivityLabel.IDLE])
    assert list(tree.predict_indices([[0.0], [1.0]])) == [1, 4]


def test_forest_one_tree_no_bootstrap_equals_tree(default_xy):
    X, y = default_xy
    params = ForestParams(n_trees=1, bootstrap=False, seed=11)
    forest = train_forest(X, y, params)
    tree = train_tree(X, y, params.tree, tree_rng(11, 0))
    assert np.array_equal(forest.predict_indices(X)[0], tree.predict_indices(X))


def test_forest_determinism(default_xy):
    X, y = default_xy
    a = train_forest(X[:300], y[:300], ForestParams(n_trees=10, seed=4))
    b = train_forest(X[:300], y[:300], ForestParams(n_trees=10, seed=4))
    c = train_forest(X[:300], y[:300], ForestParams(n_trees=10, seed=5))
    assert dumps(a) == dumps(b)
    assert dumps(a) != dumps(c)


def test_forest_training_fit(default_xy):
    X, y = default_xy
    model = train_forest(X, y, ForestParams(n_trees=25, seed=0))
    assert compute_metrics(y, model.predict_indices(X)[0]).macro_f1 >= 0.99


def test_vote_examples():
    c, s, b, i = (ActivityLabel.CRUNCHY_FOOD.index, ActivityLabel.SOFT_FOOD.index,
                  ActivityLabel.BEVERAGE.index, ActivityLabel.IDLE.index)
    winner, conf = vote(np.array([[b], [b], [b]]))
    assert (winner[0], conf[0]) == (b, 1.0)
    winner, conf = vote(np.array([[c], [s], [c]]))
    assert winner[0] == c and conf[0] == pytest.approx(2 / 3)
    winner, conf = vote(np.array([[i], [c]]))
    assert winner[0] == c and conf[0] == 0.5


def _stub_forest(leaves):
    trees = [DecisionTree([-1], [0.0], [-1], [-1], [lab], 1) for lab in leaves]
    return RandomForestModel(trees, ForestParams(n_trees=len(trees)), ("f0",))


def test_predict_single_vector_returns_label_and_confidence():
    model = _stub_forest([2, 2, 0])
    label, conf = model.predict(np.array([0.3]))
    assert label is ActivityLabel.BEVERAGE
    assert conf == pytest.approx(2 / 3)
    with pytest.raises(SchemaMismatch):
        model.predict(np.array([0.3, 1.0]))


@pytest.mark.parametrize("n_trees", [1, 2, 3, 4, 5, 6, 7])
def test_forest_vote_matches_member_trees(default_xy, n_trees):
    X, y = default_xy
    model = train_forest(X, y, ForestParams(n_trees=n_trees, seed=n_trees, tree=TreeParams(max_depth=4)))
    rng = np.random.default_rng(n_trees)
    probe = X[rng.integers(0, len(X), 500)] + rng.normal(0, 0.05, (500, X.shape[1])) * X.std(axis=0)
    winner, conf = model.predict_indices(probe)
    per_tree = [t.predict_indices(probe) for t in model.trees]
    for j in range(len(probe)):
        w, f = naive_majority([int(p[j]) for p in per_tree])
        assert winner[j] == w
        assert conf[j] == pytest.approx(f, abs=1e-12)


def test_knn_exact_neighbours():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]])
    y = np.array([0, 0, 0, 2, 2, 2])
    knn = KNearestNeighbors(k=3).fit(X, y)
    assert list(knn.predict_labels([[0.05, 0.05], [4.9, 5.2]])) == [0, 2]


def test_gbt_learns_separable_problem():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(300, 5))
    y = np.where(X[:, 0] > 0.5, 2, np.where(X[:, 1] > 0, 1, 0))
    model = GradientBoostedTrees(n_rounds=20).fit(X, y)
    assert (model.predict_labels(X) == y).mean() > 0.95
