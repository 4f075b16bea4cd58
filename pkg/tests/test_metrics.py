import numpy as np
import pytest
from hypothesis import given, strategies as st

from spectral_gn.autodiff import Tensor, bce_with_logits
from spectral_gn.estimator import positive_weight
from spectral_gn.metrics import (accuracy, graph_class_metrics, node_binary_metrics, precision_recall_f1,
                                 regression_metrics, roc_auc)

from oracles import roc_auc_pairs


def test_auc_perfect_ranking():
    assert roc_auc([1, 1, 0, 0], [0.9, 0.8, 0.1, 0.2]) == 1.0


def test_auc_all_ties_is_half():
    assert roc_auc([1, 0, 1, 0, 0], [0.3] * 5) == 0.5


def test_auc_mixed_pairs():
    assert roc_auc([1, 0, 0, 1], [0.9, 0.2, 0.8, 0.1]) == 0.5


def test_auc_single_class_is_nan():
    assert np.isnan(roc_auc([1, 1], [0.1, 0.2]))


@pytest.mark.parametrize("seed", range(20))
def test_metrics_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=50)
    y[:2] = (0, 1)
    # coarse scores so that ties occur
    s = np.round(rng.normal(size=50), 1)
    assert abs(roc_auc(y, s) - roc_auc_pairs(y, s)) <= 1e-12

    pred = (s > 0).astype(int)
    assert accuracy(y, pred) == sum(int(a == b) for a, b in zip(y, pred)) / 50
    tp = sum(1 for a, b in zip(y, pred) if a and b)
    fp = sum(1 for a, b in zip(y, pred) if not a and b)
    fn = sum(1 for a, b in zip(y, pred) if a and not b)
    p, r, f = precision_recall_f1(y, pred)
    assert (p, r) == (tp / (tp + fp) if tp + fp else 0.0, tp / (tp + fn) if tp + fn else 0.0)
    assert f == 2 * tp / (2 * tp + fp + fn)


def test_f1_empty_is_zero():
    assert precision_recall_f1([0, 0], [0, 0]) == (0.0, 0.0, 0.0)


def test_node_binary_threshold_is_zero():
    m = node_binary_metrics([1, 0, 1, 0], [0.5, -0.5, -0.1, 0.0])
    assert m["accuracy"] == 0.75 and m["precision"] == 1.0 and m["recall"] == 0.5
    assert m["roc_auc"] == 0.75


def test_graph_class_and_regression_metrics():
    m = graph_class_metrics([0, 1, 1], np.array([[2.0, 1.0], [0.0, 1.0], [3.0, 1.0]]))
    assert m["accuracy"] == pytest.approx(2 / 3)
    assert m["roc_auc"] == 0.5
    r = regression_metrics([1.0, 2.0], np.array([1.5, 1.0]))
    assert r == {"mae": 0.75, "mse": 0.625}


@given(st.integers(1, 20), st.integers(0, 2 ** 31))
def test_balanced_weight_reduces_to_plain_bce(half, seed):
    rng = np.random.default_rng(seed)
    y = rng.permutation(np.repeat([0, 1], half))
    z = rng.normal(size=(2 * half, 1))
    w = positive_weight(y, "balanced")
    assert w == 1.0
    assert bce_with_logits(Tensor(z), y, w).data[0, 0] == bce_with_logits(Tensor(z), y).data[0, 0]


def test_positive_weight_ratio():
    assert positive_weight([1, 0, 0, 0]) == 3.0
    assert positive_weight([0, 0]) == 1.0
    assert positive_weight([1, 0, 0], None) == 1.0
