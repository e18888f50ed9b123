import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.ensemble import GradientBoostingRegressor
from sklearn.tree import DecisionTreeRegressor

from oracles import best_split_brute_force
from synthpower.gbrt import (
    DEFAULT_DEPTHS,
    DEFAULT_FOLDS,
    DEFAULT_LEARNING_RATES,
    DEFAULT_N_ESTIMATORS,
    GbrtConfig,
    GbrtModel,
    contiguous_folds,
    dumps_model,
    fit_gbrt,
    fit_regression_tree,
    grid_search_cv,
    load_model,
    loads_model,
    predict,
    save_model,
)
from synthpower.metrics import nrmse


def step_data(n=40):
    x = np.linspace(0, 1, n).reshape(-1, 1)
    return x, (x[:, 0] > 0.5).astype(float)


def random_data(seed, n=200, f=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, f))
    y = np.sin(2 * X[:, 0]) + X[:, 1] * X[:, 2] + 0.1 * rng.normal(size=n)
    return X, y


def test_defaults():
    assert DEFAULT_N_ESTIMATORS == 300 and DEFAULT_DEPTHS == (2, 4, 6, 8) and DEFAULT_FOLDS == 3
    lr = DEFAULT_LEARNING_RATES
    assert lr[0] == 1e-6 and lr[1] == 3.1e-6 and lr[-2] == 0.31 and lr[-1] == 1.0
    assert len(lr) == 13 and list(lr) == sorted(lr)


@pytest.mark.parametrize("kw", [dict(learning_rate=0), dict(learning_rate=0.1, max_depth=0), dict(learning_rate=0.1, min_samples_leaf=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        GbrtConfig(**kw)


class TestTree:
    def test_constant_residuals(self):
        tree = fit_regression_tree(np.arange(10.0).reshape(-1, 1), np.full(10, 2.5), 3)
        assert tree.n_nodes == 1 and tree.value[0] == 2.5

    def test_four_point_split(self):
        tree = fit_regression_tree([[0], [1], [2], [3]], [0, 0, 1, 1], 1)
        assert tree.feature[0] == 0 and tree.threshold[0] == 1.5
        assert tree.value[tree.left[0]] == 0 and tree.value[tree.right[0]] == 1

    def test_depth_zero_rejected(self):
        with pytest.raises(ValueError):
            fit_regression_tree([[0.0], [1.0]], [0.0, 1.0], 0)

    def test_empty(self):
        with pytest.raises(ValueError, match="empty"):
            fit_regression_tree(np.zeros((0, 2)), [], 2)

    def test_tie_goes_to_lowest_feature(self):
        X = np.array([[0, 0], [1, 1], [2, 2], [3, 3]], dtype=float)
        tree = fit_regression_tree(X, [0, 0, 1, 1], 1)
        assert tree.feature[0] == 0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(3, 25), st.integers(1, 3))
    def test_root_matches_brute_force(self, seed, n, f):
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 6, size=(n, f)).astype(float)
        r = rng.normal(size=n)
        tree = fit_regression_tree(X, r, 1)
        best = best_split_brute_force(X.tolist(), r.tolist())
        if best is None:
            assert tree.n_nodes == 1
            return
        f0, thr, lm, rm = best
        assert (tree.feature[0], tree.threshold[0]) == (f0, thr)
        assert tree.value[tree.left[0]] == pytest.approx(lm, abs=1e-12)
        assert tree.value[tree.right[0]] == pytest.approx(rm, abs=1e-12)

    @pytest.mark.parametrize("depth,leaf", [(1, 1), (3, 1), (5, 4), (8, 2)])
    def test_matches_sklearn(self, depth, leaf):
        X, y = random_data(depth * 10 + leaf, n=400, f=5)
        ours = fit_regression_tree(X, y, depth, leaf)
        ref = DecisionTreeRegressor(max_depth=depth, min_samples_leaf=leaf, random_state=0).fit(X, y)
        # compared on the training rows: a split on either of two features that
        # yield the same partition is equally optimal, so unseen points may differ
        assert np.allclose(ours.predict(X), ref.predict(X), atol=1e-12)
        assert ours.depth <= depth

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (30, 2), elements=st.floats(-5, 5)), st.integers(1, 6))
    def test_leaf_means_and_depth(self, X, depth):
        r = X[:, 0] ** 2 - X[:, 1]
        tree = fit_regression_tree(X, r, depth)
        assert tree.depth <= depth
        # each leaf value is the mean of the residuals routed to it
        pred = tree.predict(X)
        for v in np.unique(pred):
            assert v == pytest.approx(r[pred == v].mean(), abs=1e-9)


class TestBoosting:
    def test_constant_target(self):
        model = fit_gbrt(np.random.default_rng(0).normal(size=(20, 3)), np.full(20, 0.7), GbrtConfig(0.1, 50, 3))
        assert np.array_equal(predict(model, np.random.default_rng(1).normal(size=(5, 3))), np.full(5, 0.7))

    def test_step_exact_fit(self):
        X, y = step_data()
        model = fit_gbrt(X, y, GbrtConfig(1.0, 1, 1))
        assert np.allclose(predict(model, X), y, atol=1e-9)

    def test_one_sample(self):
        with pytest.raises(ValueError):
            fit_gbrt([[1.0]], [1.0], GbrtConfig(0.1))

    def test_empty_tree_list(self):
        X, y = step_data()
        model = fit_gbrt(X, y, GbrtConfig(0.1, 0, 2))
        assert model.trees == [] and (predict(model, X) == y.mean()).all()

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([0.01, 0.1, 0.5, 1.0]), st.integers(1, 6))
    def test_training_mse_non_increasing(self, seed, lr, depth):
        X, y = random_data(seed, n=120)
        model = fit_gbrt(X, y, GbrtConfig(lr, 40, depth))
        mse = np.array(model.train_mse)
        assert len(mse) == 41
        assert (np.diff(mse) <= 1e-12 * max(1.0, mse[0])).all()
        assert mse[-1] == pytest.approx(np.mean((predict(model, X) - y) ** 2), rel=1e-9, abs=1e-15)

    def test_additive_form(self):
        X, y = random_data(3)
        model = fit_gbrt(X, y, GbrtConfig(0.2, 25, 3))
        manual = model.base_value + model.learning_rate * sum(t.predict(X) for t in model.trees)
        assert np.allclose(predict(model, X), manual, atol=1e-12)

    @pytest.mark.parametrize("lr,depth", [(0.1, 2), (0.31, 4), (1.0, 3)])
    def test_matches_sklearn(self, lr, depth):
        X, y = random_data(int(lr * 100) + depth, n=300)
        ours = fit_gbrt(X, y, GbrtConfig(lr, 60, depth))
        ref = GradientBoostingRegressor(
            learning_rate=lr, n_estimators=60, max_depth=depth, criterion="squared_error", random_state=0
        ).fit(X, y)
        assert np.allclose(predict(ours, X), ref.predict(X), atol=1e-9)

    def test_tiny_learning_rate(self):
        X, y = random_data(4)
        model = fit_gbrt(X, y, GbrtConfig(1e-12, 300, 4))
        assert np.allclose(predict(model, X), y.mean(), atol=1e-6)

    def test_feature_count_mismatch(self):
        X, y = random_data(5)
        with pytest.raises(ValueError, match="features"):
            predict(fit_gbrt(X, y, GbrtConfig(0.1, 5, 2)), X[:, :3])

    def test_permutation(self):
        X, y = random_data(6)
        model = fit_gbrt(X, y, GbrtConfig(0.1, 30, 3))
        perm = np.random.default_rng(0).permutation(len(X))
        assert np.array_equal(predict(model, X[perm]), predict(model, X)[perm])

    def test_determinism(self):
        X, y = random_data(8)
        a = fit_gbrt(X, y, GbrtConfig(0.1, 50, 4))
        b = fit_gbrt(X.copy(), y.copy(), GbrtConfig(0.1, 50, 4))
        assert a == b and np.array_equal(predict(a, X), predict(b, X))


class TestGridSearch:
    def test_folds_are_contiguous(self):
        folds = contiguous_folds(10, 3)
        assert [f.tolist() for f in folds] == [[0, 1, 2, 3], [4, 5, 6], [7, 8, 9]]
        with pytest.raises(ValueError, match="fewer samples"):
            contiguous_folds(2, 3)

    def test_single_config(self):
        X, y = random_data(1, n=60)
        assert grid_search_cv(X, y, [0.1], [3], n_estimators=10) == GbrtConfig(0.1, 10, 3)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            grid_search_cv([[0.0], [1.0]], [0.0, 1.0], [0.1], [2], n_estimators=2)

    def test_tie_break(self):
        # constant target: every config scores zero
        X = np.arange(30.0).reshape(-1, 1)
        best, scores = grid_search_cv(X, np.ones(30), [1.0, 0.1], [4, 2], n_estimators=5, return_scores=True)
        assert set(scores.values()) == {0.0}
        assert best == GbrtConfig(0.1, 5, 2)

    def test_step_function(self):
        # interleave so every fold sees both sides of the step
        X, y = step_data()
        order = np.argsort(np.arange(40) % 3, kind="stable")
        X, y = X[order], y[order]
        lrs, depths = [0.1, 1.0], [2, 4, 6]
        best, scores = grid_search_cv(X, y, lrs, depths, n_estimators=20, return_scores=True)
        brute = {}
        for lr in lrs:
            for d in depths:
                errs = []
                for val in contiguous_folds(40, 3):
                    tr = np.setdiff1d(np.arange(40), val)
                    m = fit_gbrt(X[tr], y[tr], GbrtConfig(lr, 20, d))
                    errs.append(nrmse(y[val], predict(m, X[val])))
                brute[(lr, d)] = np.mean(errs)
        assert {(c.learning_rate, c.max_depth): s for c, s in scores.items()} == pytest.approx(brute, abs=1e-15)
        assert scores[best] == min(scores.values())
        assert all(scores[best] <= scores[GbrtConfig(best.learning_rate, 20, d)] for d in depths if d > best.max_depth)


class TestSerialization:
    def model(self):
        X, y = random_data(11)
        return fit_gbrt(X, y, GbrtConfig(0.1, 20, 5)), X

    def test_round_trip(self, tmp_path):
        model, X = self.model()
        save_model(model, tmp_path / "m.txt")
        again = load_model(tmp_path / "m.txt")
        assert again == model
        assert np.array_equal(predict(again, X), predict(model, X))
        assert dumps_model(again) == dumps_model(model)

    def test_header(self):
        model, _ = self.model()
        assert dumps_model(model).splitlines()[0] == "gbrt-model 1"

    def test_bad_version(self):
        model, _ = self.model()
        with pytest.raises(ValueError, match="version"):
            loads_model(dumps_model(model).replace("gbrt-model 1", "gbrt-model 9", 1))

    def test_equality_detects_change(self):
        model, _ = self.model()
        other = GbrtModel(model.base_value + 1e-15, model.trees, model.learning_rate, model.n_features)
        assert other != model
