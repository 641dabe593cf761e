import numpy as np
import pytest

from conftest import make_threshold_dataset
from helios.baselines import (
    EnsembleModel, TreeParams, fit_adaboost, fit_gradient_boosting, fit_random_forest,
    fit_regression_tree, fit_tree, load_ensemble, save_ensemble,
)
from helios.exceptions import BaselineError, ConfigurationError, DataFormatError


def _gini(y, w, n_classes):
    counts = np.bincount(y, weights=w, minlength=n_classes)
    total = counts.sum()
    return 0.0 if total == 0 else 1.0 - ((counts / total) ** 2).sum()


def _exhaustive_split(X, y, w, n_classes):
    """Every (feature, midpoint) pair, weighted Gini, lowest feature then threshold on ties."""
    candidates = []
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            t = (lo + hi) / 2.0
            left = X[:, f] <= t
            impurity = (w[left].sum() * _gini(y[left], w[left], n_classes)
                        + w[~left].sum() * _gini(y[~left], w[~left], n_classes)) / w.sum()
            candidates.append((impurity, f, t))
    if not candidates:
        return None
    best = min(c[0] for c in candidates)
    return min((f, t) for imp, f, t in candidates if imp <= best + 1e-9)


def _check_against_oracle(tree, X, y, w, n_classes, node=0, rows=None):
    rows = np.arange(X.shape[0]) if rows is None else rows
    if tree.feature[node] == -1:
        return
    expected = _exhaustive_split(X[rows], y[rows], w[rows], n_classes)
    assert expected is not None
    assert tree.feature[node] == expected[0]
    assert tree.threshold[node] == pytest.approx(expected[1], abs=1e-12)
    go_left = X[rows, tree.feature[node]] <= tree.threshold[node]
    _check_against_oracle(tree, X, y, w, n_classes, tree.left[node], rows[go_left])
    _check_against_oracle(tree, X, y, w, n_classes, tree.right[node], rows[~go_left])


class TestTree:
    def test_separable_stump(self):
        tree = fit_tree(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0, 0, 1, 1]),
                        params=TreeParams(max_depth=1))
        assert 2.0 <= tree.threshold[0] < 3.0
        np.testing.assert_array_equal(tree.predict(np.array([[1.0], [2.0], [3.0], [4.0]])),
                                      [0, 0, 1, 1])

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_exhaustive_search(self, seed):
        rng = np.random.default_rng(seed)
        n, d, k = int(rng.integers(4, 33)), int(rng.integers(1, 5)), int(rng.integers(2, 4))
        # coarse values so duplicates and ties actually occur
        X = rng.integers(0, 6, size=(n, d)).astype(float)
        y = rng.integers(0, k, size=n)
        w = rng.uniform(0.5, 2.0, size=n) if seed % 2 else np.ones(n)
        tree = fit_tree(X, y, w, TreeParams(max_depth=2), n_classes=k)
        _check_against_oracle(tree, X, y, w, k)

    def test_pure_input_is_single_leaf(self):
        tree = fit_tree(np.arange(10.0).reshape(5, 2), np.full(5, 3), n_classes=5)
        assert tree.n_nodes == 1
        np.testing.assert_array_equal(tree.value[0], [0, 0, 0, 1, 0])

    def test_identical_rows_take_majority(self):
        X = np.ones((5, 2))
        tree = fit_tree(X, np.array([0, 1, 1, 2, 1]), n_classes=3)
        assert tree.n_nodes == 1
        assert tree.predict(X[:1])[0] == 1

    def test_leaves_are_distributions(self, rng):
        X = rng.normal(size=(60, 3))
        tree = fit_tree(X, rng.integers(0, 4, size=60), params=TreeParams(max_depth=4), n_classes=4)
        leaves = tree.value[tree.is_leaf]
        np.testing.assert_allclose(leaves.sum(axis=1), 1.0)
        internal = ~tree.is_leaf
        assert np.all(tree.left[internal] >= 0) and np.all(tree.right[internal] >= 0)
        assert tree.depth <= 4

    def test_min_samples_leaf(self, rng):
        X = rng.normal(size=(40, 2))
        tree = fit_tree(X, rng.integers(0, 2, size=40), params=TreeParams(min_samples_leaf=5))
        counts = np.bincount(tree.apply(X), minlength=tree.n_nodes)
        assert counts[tree.is_leaf].min() >= 5

    def test_zero_weights_rejected(self):
        with pytest.raises(BaselineError):
            fit_tree(np.ones((3, 1)), np.array([0, 1, 0]), weights=np.zeros(3))

    def test_regression_tree(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        tree = fit_regression_tree(X, np.array([1.0, 1.0, 5.0, 5.0]), params=TreeParams(max_depth=1))
        np.testing.assert_allclose(tree.predict_value(X)[:, 0], [1.0, 1.0, 5.0, 5.0])

    def test_invalid_params(self):
        with pytest.raises(ConfigurationError):
            TreeParams(max_depth=-1)
        with pytest.raises(ConfigurationError):
            TreeParams(min_samples_leaf=0)


@pytest.fixture(scope="module")
def separable():
    train = make_threshold_dataset(600, 4, seed=21)
    test = make_threshold_dataset(300, 4, seed=22, split_tag="test")
    return train, test


class TestRandomForest:
    def test_single_tree_degeneracy(self, rng):
        X, y = rng.normal(size=(80, 3)), rng.integers(0, 3, size=80)
        params = TreeParams(max_depth=3)
        forest = fit_random_forest(X, y, n_trees=1, params=params, seed=0)
        tree = fit_tree(X, y, params=params, n_classes=3)
        np.testing.assert_array_equal(forest.predict(X), tree.predict(X))

    def test_separable_accuracy(self, separable):
        train, test = separable
        forest = fit_random_forest(train.features, train.labels, n_trees=30, seed=0, n_classes=5)
        assert forest.score(test.features, test.labels) >= 0.95

    def test_independent_of_workers(self, separable):
        train, test = separable
        a = fit_random_forest(train.features, train.labels, n_trees=6, seed=4, n_jobs=1)
        b = fit_random_forest(train.features, train.labels, n_trees=6, seed=4, n_jobs=2)
        np.testing.assert_array_equal(a.predict_proba(test.features), b.predict_proba(test.features))

    def test_importances_favor_informative_feature(self, separable):
        train, _ = separable
        forest = fit_random_forest(train.features, train.labels, n_trees=20, seed=0)
        importances = forest.feature_importances_
        assert importances.sum() == pytest.approx(1.0)
        assert int(np.argmax(importances)) == 0

    def test_needs_a_tree(self, separable):
        train, _ = separable
        with pytest.raises(BaselineError):
            fit_random_forest(train.features, train.labels, n_trees=0)


class TestAdaBoost:
    def test_one_round_on_separable_data(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        model = fit_adaboost(X, np.array([0, 0, 1, 1]), n_rounds=10)
        assert model.n_members == 1
        assert model.hyperparameters["stop_reason"] == "perfect"
        assert model.score(X, [0, 0, 1, 1]) == 1.0

    def test_coin_flip_stump_stops(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        model = fit_adaboost(X, np.array([0, 1, 0, 1]), n_rounds=10)
        assert model.n_members == 0
        assert model.hyperparameters["stop_reason"] == "weak"
        np.testing.assert_allclose(model.predict_proba(X), 0.5)

    def test_staged_error_mostly_non_increasing(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(50, 2))
        y = np.minimum((X[:, 0] * 3).astype(int), 2)
        model = fit_adaboost(X, y, n_rounds=30)
        errors = model.staged_error(X, y)
        assert np.all(np.isfinite(model.weights))
        if len(errors) > 1:
            assert np.mean(np.diff(errors) <= 0) >= 0.9

    def test_probabilities(self, separable):
        train, test = separable
        proba = fit_adaboost(train.features, train.labels, n_rounds=15).predict_proba(test.features)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0)
        assert np.all(proba >= 0)


class TestGradientBoosting:
    def test_zero_learning_rate_predicts_prior(self, rng):
        X = rng.normal(size=(40, 2))
        y = np.array([0] * 10 + [1] * 25 + [2] * 5)
        model = fit_gradient_boosting(X, y, n_rounds=3, learning_rate=0.0)
        np.testing.assert_array_equal(model.predict(X), np.ones(40))
        np.testing.assert_allclose(model.predict_proba(X)[0], [0.25, 0.625, 0.125])

    def test_staged_deviance_non_increasing(self, separable):
        train, _ = separable
        model = fit_gradient_boosting(train.features, train.labels, n_rounds=15, learning_rate=0.1)
        deviance = model.staged_deviance(train.features, train.labels)
        assert len(deviance) == 15
        assert np.all(np.diff(deviance) <= 1e-12)

    def test_one_tree_per_class_per_round(self, separable):
        train, _ = separable
        model = fit_gradient_boosting(train.features, train.labels, n_rounds=4)
        assert len(model.trees) == 4 * 5
        assert model.n_members == 4

    def test_separable_accuracy(self, separable):
        train, test = separable
        model = fit_gradient_boosting(train.features, train.labels, n_rounds=20, learning_rate=0.3)
        assert model.score(test.features, test.labels) >= 0.9

    def test_negative_learning_rate(self, rng):
        with pytest.raises(ConfigurationError):
            fit_gradient_boosting(rng.normal(size=(10, 2)), np.arange(10) % 2, learning_rate=-0.1)


class TestPersistence:
    @pytest.mark.parametrize("kind", ["rf", "adaboost", "gbm"])
    def test_round_trip(self, separable, tmp_path, kind):
        train, test = separable
        fitters = {
            "rf": lambda: fit_random_forest(train.features, train.labels, n_trees=3, seed=1),
            "adaboost": lambda: fit_adaboost(train.features, train.labels, n_rounds=3),
            "gbm": lambda: fit_gradient_boosting(train.features, train.labels, n_rounds=2),
        }
        model = fitters[kind]()
        path = save_ensemble(model, str(tmp_path / kind))
        assert path.endswith(".hsens")
        loaded = load_ensemble(path)
        assert loaded.kind == kind
        np.testing.assert_array_equal(loaded.predict_proba(test.features),
                                      model.predict_proba(test.features))

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.hsens"
        path.write_text("{not json")
        with pytest.raises(DataFormatError):
            load_ensemble(str(path))

    def test_unknown_kind(self):
        with pytest.raises(BaselineError):
            EnsembleModel("svm", 2, 1)
