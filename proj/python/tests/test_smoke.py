import json

import numpy as np
import pytest

import sratio


@pytest.fixture(scope="module")
def blobs():
    ds = sratio.make_synthetic("gaussian-blobs-3", 400, 3)
    train, test = sratio.train_test_split(ds, 0.7, 1)
    train, test, _, _ = sratio.standardize(train, test)
    return train, test


def test_dataset_round_trip(tmp_path):
    X = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    y = np.array([0, 1, 1])
    ds = sratio.Dataset(X, y)
    assert len(ds) == 3 and ds.n_features == 2 and ds.n_classes == 2
    np.testing.assert_array_equal(ds.X, X)
    np.testing.assert_array_equal(ds.y, y)
    sratio.write_csv(ds, tmp_path / "d.csv")
    back = sratio.load_csv(tmp_path / "d.csv", "label")
    np.testing.assert_array_equal(back.X, X)
    with pytest.raises(sratio.DataError):
        sratio.Dataset(X, np.array([0, 1]))
    assert "gaussian-blobs-3" in sratio.synthetic_names()


def test_tree_weights_and_errors():
    ds = sratio.Dataset(np.array([[1.0], [2.0]]), np.array([0, 1]))
    tree = sratio.TreeLearner(max_depth=3).fit(ds)
    np.testing.assert_allclose(tree.predict_proba(np.array([[1.0], [2.0]])), [[2 / 3, 1 / 3], [1 / 3, 2 / 3]])
    # doubling every weight keeps the splits; leaves hold raw class weights
    twice = sratio.TreeLearner(max_depth=3).fit(ds, np.array([2.0, 2.0]))
    a, b = json.loads(tree.to_json())["nodes"], json.loads(twice.to_json())["nodes"]
    assert a[0] == b[0] and a[0]["threshold"] == 1.5
    assert b[1]["class_weights"] == [2.0, 0.0]
    with pytest.raises(sratio.FitError):
        sratio.TreeLearner().fit(ds, np.zeros(2))
    with pytest.raises(sratio.DataError):
        tree.predict_proba(np.zeros((1, 3)))


def test_models_predict(blobs):
    train, test = blobs
    for learner in (sratio.TreeLearner(max_depth=5), sratio.SvmLearner()):
        model = learner.fit(train)
        p = model.predict_proba(test.X)
        assert p.shape == (len(test), 3)
        np.testing.assert_allclose(p.sum(axis=1), 1.0)
        assert np.mean(model.predict(test.X) != test.y) == pytest.approx(model.error_rate(test))
        assert model.error_rate(test) < 0.2


def test_sratio_pipeline(blobs):
    train, test = blobs
    boosted = sratio.fit_gradient_boosting(train, n_trees=30)
    assert isinstance(boosted, sratio.BoostedModel) and boosted.n_stages == 30
    graded = sratio.graded_from_boosting(boosted, 10)
    assert len(graded) == 3
    assert 0.0 <= graded.gradedness(train) <= 1.0

    simple = sratio.TreeLearner(max_depth=3).fit(train)
    rep = sratio.sratio_weights(graded, simple, train, 0.0, 5.0)
    assert rep["weights"].shape == (len(train),)
    assert np.all((rep["weights"] == 0) | (rep["weights"] <= 5.0))

    # gamma above any gap leaves the active set empty: unit weights
    unit = sratio.sratio_weights(graded, simple, train, 2.0, 5.0)
    np.testing.assert_array_equal(unit["weights"], np.ones(len(train)))

    model, report, cv = sratio.sratio_train(
        graded, sratio.TreeLearner(max_depth=3), train, gamma_grid=[0.0, 0.05], beta_grid=[2.0, 5.0], cv_folds=3
    )
    assert len(cv) == 4
    assert (report["gamma"], report["beta"]) in [(g, b) for g, b, _ in cv]
    assert model.predict_proba(test.X).shape == (len(test), 3)
    assert 0.0 <= sratio.zero_weight_fraction(report["weights"]) <= 100.0  # percent
    purity = sratio.neighbor_purity(train, report["weights"], 10)
    assert set(purity) == {"zero", "top5", "middle"}


def test_baselines(blobs):
    train, _ = blobs
    forest = sratio.fit_random_forest(train, n_trees=10, max_depth=4)
    assert len(forest.train_accuracy) == 10
    assert len(sratio.graded_from_forest(forest, 5, "out_of_bag")) == 2
    w = sratio.confweight_weights(forest, train)
    assert np.all((w >= 0) & (w <= 1))
    d1 = sratio.distill_proxy1(forest, sratio.TreeLearner(max_depth=3), train)
    d2 = sratio.distill_proxy2(forest, sratio.SvrLearner(), train)
    for m in (d1, d2):
        p = m.predict_proba(train.X)
        np.testing.assert_allclose(p.sum(axis=1), 1.0)


def test_bound_and_summary():
    for row in sratio.bound_sweep(10000, [1.5, 2.0, 10.0], 1):
        assert row["pointwise_violations"] == 0 and row["aggregate_holds"]
    lhs, rhs = sratio.bound_check(np.array([0.5]), np.array([0.5]), np.array([0.5]), 2.0)
    assert lhs <= rhs
    assert sratio.summarize([0.0, 10.0]) == pytest.approx((5.0, 9.8))


def test_benchmark_from_dict():
    cfg = {
        "datasets": [{"synthetic": "gaussian-blobs-2", "n": 150, "seed": 1}],
        "complex": [{"type": "boosting", "n_trees": 10}],
        "simple": [{"type": "tree", "max_depth": 2}],
        "methods": ["standard", "sratio"],
        "splits": 2,
        "cv_folds": 2,
        "gamma_grid": [0.0],
        "beta_grid": [2.0],
    }
    a, failures = sratio.run_benchmark(cfg, threads=1)
    b, _ = sratio.run_benchmark(cfg, threads=3)
    assert failures == 0
    assert a["config_hash"] == sratio.config_hash(cfg)
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b
    with pytest.raises(sratio.ConfigError):
        sratio.run_benchmark({**cfg, "bogus": 1})
