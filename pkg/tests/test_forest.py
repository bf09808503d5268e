import itertools

import numpy as np
import pytest

from conftest import planted_counts
from textpipes.errors import DataError, DomainError, ShapeError
from textpipes.forest import (ExtraTreesModel, ForestParams, Tree, feature_importances,
                              fit_extra_trees, gini_impurity, predict_forest)
from textpipes.sparse import SparseMatrix


def gini_by_pairs(counts):
    """Probability that two draws with replacement disagree, by enumeration."""
    labels = [k for k, c in enumerate(counts) for _ in range(c)]
    n = len(labels)
    differ = sum(a != b for a, b in itertools.product(labels, repeat=2))
    return differ / (n * n)


@pytest.mark.parametrize("counts, expected", [([4, 0], 0.0), ([2, 2], 0.5), ([2, 1, 1], 0.625)])
def test_gini_examples(counts, expected):
    assert gini_impurity(counts) == pytest.approx(expected, abs=1e-15)


def test_gini_empty():
    with pytest.raises(DomainError):
        gini_impurity([0, 0])


def test_gini_matches_pair_enumeration():
    for k in range(1, 5):
        for counts in itertools.product(range(4), repeat=k):
            if sum(counts):
                assert abs(gini_impurity(counts) - gini_by_pairs(counts)) <= 1e-12


def leaf_tree(counts):
    c = np.asarray([counts], dtype=float)
    return Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), c)


def test_single_class_gives_single_leaves():
    X = SparseMatrix.from_dense(np.random.default_rng(0).integers(0, 3, (20, 4)))
    model = fit_extra_trees(X, np.ones(20, dtype=int), ForestParams(n_trees=5))
    assert all(t.n_nodes == 1 for t in model.trees)
    assert np.all(feature_importances(model) == 0)


def separable():
    x = np.arange(1, 21, dtype=float)
    return SparseMatrix.from_dense(x[:, None]), (x > 10).astype(int)


def test_separable_training_accuracy():
    X, y = separable()
    model = fit_extra_trees(X, y, ForestParams(n_trees=50, seed=4))
    assert np.array_equal(predict_forest(model, X), y)


def test_determinism_and_thread_invariance():
    X, y = planted_counts(5)
    params = ForestParams(n_trees=12, seed=9)
    a = fit_extra_trees(X, y, params)
    b = fit_extra_trees(X, y, params, threads=4)
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)
        assert np.array_equal(ta.counts, tb.counts)
    assert np.array_equal(feature_importances(a), feature_importances(b))


def test_constant_model_predictions():
    model = ExtraTreesModel([leaf_tree([0, 3])], 2, 2, ForestParams(n_trees=1))
    X = SparseMatrix.from_dense(np.ones((4, 2)))
    assert predict_forest(model, X).tolist() == [1, 1, 1, 1]


def test_tie_breaks_to_lowest_class():
    model = ExtraTreesModel([leaf_tree([1, 0]), leaf_tree([0, 1])], 1, 2,
                            ForestParams(n_trees=2))
    assert predict_forest(model, SparseMatrix.from_dense([[0.0]])).tolist() == [0]


def test_predict_shape_mismatch():
    X, y = separable()
    model = fit_extra_trees(X, y, ForestParams(n_trees=2))
    with pytest.raises(ShapeError):
        predict_forest(model, SparseMatrix.from_dense([[1.0, 2.0]]))


def test_empty_input():
    with pytest.raises(DataError):
        fit_extra_trees(SparseMatrix.empty(0, 3), [], ForestParams(n_trees=2))


def test_tree_structure_routes_every_row_to_one_leaf():
    X, y = planted_counts(1)
    model = fit_extra_trees(X, y, ForestParams(n_trees=5, seed=2))
    for tree in model.trees:
        inner = tree.feature >= 0
        assert np.all(tree.feature[inner] < model.n_features)
        assert np.all(tree.counts.sum(axis=1) > 0)
        leaves = tree.apply(X)
        assert np.all(tree.feature[leaves] == -1)
        # training rows reproduce the stored leaf class counts
        for leaf in np.unique(leaves):
            got = np.bincount(y[leaves == leaf], minlength=2)
            assert np.array_equal(got, tree.counts[leaf])
        # children partition their parent
        kids = tree.counts[tree.left[inner]] + tree.counts[tree.right[inner]]
        assert np.array_equal(kids, tree.counts[inner])


def test_importances_normalized():
    X, y = planted_counts(2)
    imp = feature_importances(fit_extra_trees(X, y, ForestParams(n_trees=10)))
    assert np.all(imp >= 0)
    assert abs(imp.sum() - 1) <= 1e-9


def test_planted_signal_has_top_importance():
    wins = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        A = rng.poisson(1.0, (150, 6)).astype(float)
        y = (A[:, 0] >= 1).astype(int)
        model = fit_extra_trees(SparseMatrix.from_dense(A), y, ForestParams(n_trees=30, seed=seed))
        wins += int(np.argmax(feature_importances(model)) == 0)
    assert wins == 20


def test_max_depth_and_min_samples_split():
    X, y = planted_counts(3)
    stump = fit_extra_trees(X, y, ForestParams(n_trees=3, max_depth=1))
    assert all(t.n_nodes <= 3 for t in stump.trees)
    coarse = fit_extra_trees(X, y, ForestParams(n_trees=3, min_samples_split=150))
    for t in coarse.trees:
        assert np.all(t.counts[t.feature >= 0].sum(axis=1) >= 150)
