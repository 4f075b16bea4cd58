import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from spectral_gn import (SpectralFeaturizer, SpectralGNClassifier, SpectralGNNodeClassifier,
                         SpectralGNRegressor, load_estimator)
from spectral_gn.datasets import generate
from spectral_gn.exceptions import ShapeMismatch, WidthMismatch

from conftest import cycle_graph, path_graph, with_features

SMALL = dict(latent_size=8, hidden_size=8, n_hidden=1, n_steps=2, batch_size=4)


@pytest.fixture(scope="module")
def node_data():
    samples = list(generate("delaunay2d", 16, 12, seed=2))
    return [s.graph for s in samples], [s.label for s in samples]


def _graph_data(rng, count=12):
    graphs = [with_features(cycle_graph(int(n)), rng, dv=2, de=1, dg=1) for n in rng.integers(5, 9, size=count)]
    return graphs


def test_params_roundtrip_through_clone():
    est = SpectralGNNodeClassifier(k=3, latent_size=16, class_weight=None)
    params = clone(est).get_params()
    assert params["k"] == 3 and params["latent_size"] == 16 and params["class_weight"] is None
    assert set(SpectralGNClassifier().get_params()) < set(params)


def test_node_classifier_fit_predict(node_data):
    X, y = node_data
    est = SpectralGNNodeClassifier(max_iter=30, **SMALL).fit(X, y)
    assert est.n_iter_ == 30 and len(est.loss_curve_) == 30
    pred = est.predict(X)
    assert [p.shape for p in pred] == [(g.n_nodes,) for g in X]
    assert set(np.concatenate(pred)) <= {0, 1}
    assert 0.0 <= est.score(X, y) <= 1.0


def test_node_classifier_learns(node_data):
    X, y = node_data
    est = SpectralGNNodeClassifier(max_iter=1, **SMALL).fit(X, y)
    before = np.mean(est.loss_curve_[:1])
    est = SpectralGNNodeClassifier(max_iter=150, learning_rate=1e-2, **SMALL).fit(X, y)
    assert np.mean(est.loss_curve_[-10:]) < before


def test_fit_is_deterministic(node_data):
    X, y = node_data
    a = SpectralGNNodeClassifier(max_iter=5, **SMALL).fit(X, y)
    b = SpectralGNNodeClassifier(max_iter=5, **SMALL).fit(X, y)
    assert a.loss_curve_ == b.loss_curve_
    for za, zb in zip(a.decision_function(X), b.decision_function(X)):
        assert np.array_equal(za, zb)


def test_callback_sees_every_iteration(node_data):
    X, y = node_data
    seen = []
    SpectralGNNodeClassifier(max_iter=3, **SMALL).fit(X, y, callback=lambda e, it, loss: seen.append((it, loss)))
    assert [it for it, _ in seen] == [0, 1, 2, 3]
    assert seen[0][1] is None and all(isinstance(l, float) for _, l in seen[1:])


def test_graph_classifier_and_proba(rng):
    X = _graph_data(rng)
    y = np.array(["a", "b"] * 6)
    est = SpectralGNClassifier(max_iter=10, **SMALL).fit(X, y)
    proba = est.predict_proba(X)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert set(est.predict(X)) <= {"a", "b"}
    assert list(est.classes_) == ["a", "b"]


def test_regressor_shapes(rng):
    X = _graph_data(rng)
    y = np.array([g.n_nodes for g in X], dtype=float)
    est = SpectralGNRegressor(max_iter=10, **SMALL).fit(X, y)
    assert est.predict(X).shape == (12,)
    est2 = SpectralGNRegressor(max_iter=2, **SMALL).fit(X, np.stack([y, -y], 1))
    assert est2.predict(X).shape == (12, 2)


def test_save_and_load_reproduce_outputs(node_data, tmp_path):
    X, y = node_data
    est = SpectralGNNodeClassifier(max_iter=5, **SMALL).fit(X, y)
    est.save(tmp_path / "m.ckpt", note="x")
    again, header = load_estimator(tmp_path / "m.ckpt")
    assert header["note"] == "x" and again.n_iter_ == 5
    for za, zb in zip(est.decision_function(X), again.decision_function(X)):
        assert np.array_equal(za, zb)


def test_classifier_save_keeps_classes(rng, tmp_path):
    X = _graph_data(rng)
    est = SpectralGNClassifier(max_iter=2, **SMALL).fit(X, [3, 7] * 6)
    est.save(tmp_path / "c.ckpt")
    again, _ = load_estimator(tmp_path / "c.ckpt")
    assert list(again.predict(X)) == list(est.predict(X))


def test_featurizer_reuse_matches_raw_input(node_data):
    X, y = node_data
    est = SpectralGNNodeClassifier(max_iter=3, **SMALL).fit(X, y)
    feats = SpectralFeaturizer(k=4).fit(X).transform(X)
    for za, zb in zip(est.decision_function(X), est.decision_function(feats)):
        assert np.array_equal(za, zb)


def test_featurizer_edge_dropout_keeps_basis(node_data):
    X, _ = node_data
    plain = SpectralFeaturizer(k=4).transform(X)
    dropped = SpectralFeaturizer(k=4, edge_dropout=1.0).transform(X)
    for a, b in zip(plain, dropped):
        assert b.graph.n_edges == 0
        assert np.array_equal(a.spectral.projection, b.spectral.projection)


def test_featurizer_k_mismatch_is_rejected(node_data):
    X, y = node_data
    est = SpectralGNNodeClassifier(max_iter=1, **SMALL).fit(X, y)
    with pytest.raises(ShapeMismatch):
        est.predict(SpectralFeaturizer(k=2).transform(X))


def test_input_validation(node_data, rng):
    X, y = node_data
    with pytest.raises(NotFittedError):
        SpectralGNNodeClassifier().predict(X)
    with pytest.raises(ShapeMismatch):
        SpectralGNNodeClassifier(max_iter=1, **SMALL).fit(X, y[:-1])
    with pytest.raises(ValueError):
        SpectralGNNodeClassifier(max_iter=1, **SMALL).fit(X[:1], [np.full(X[0].n_nodes, 2)])
    with pytest.raises(WidthMismatch):
        SpectralGNRegressor(max_iter=1, **SMALL).fit([path_graph(4), with_features(path_graph(4), rng)], [0, 1])
