"""Classification metrics used by the training harness."""
from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true).reshape(-1)
    y_pred = np.asarray(y_pred).reshape(-1)
    if y_true.size == 0:
        return float("nan")
    return float(np.mean(y_true == y_pred))


def precision_recall_f1(y_true, y_pred):
    """Binary precision, recall and F1; empty denominators give 0."""
    y_true = np.asarray(y_true).reshape(-1).astype(bool)
    y_pred = np.asarray(y_pred).reshape(-1).astype(bool)
    tp = int(np.sum(y_true & y_pred))
    fp = int(np.sum(~y_true & y_pred))
    fn = int(np.sum(y_true & ~y_pred))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0
    return precision, recall, f1


def roc_auc(y_true, scores) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Tied scores receive their average (mid) rank, so every tied
    positive/negative pair counts one half.
    """
    y = np.asarray(y_true).reshape(-1).astype(bool)
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def node_binary_metrics(y_true, logits) -> dict:
    """Accuracy, precision, recall and F1 at logit threshold 0, plus ROC-AUC."""
    y_true = np.asarray(y_true).reshape(-1)
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    pred = (logits > 0).astype(np.int64)
    p, r, f = precision_recall_f1(y_true, pred)
    return {"accuracy": accuracy(y_true, pred), "precision": p, "recall": r, "f1": f,
            "roc_auc": roc_auc(y_true, logits)}


def graph_class_metrics(y_true, logits) -> dict:
    logits = np.asarray(logits, dtype=np.float64)
    out = {"accuracy": accuracy(y_true, logits.argmax(axis=1))}
    if logits.shape[1] == 2:
        out["roc_auc"] = roc_auc(y_true, logits[:, 1] - logits[:, 0])
    return out


def regression_metrics(y_true, pred) -> dict:
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(y_true, dtype=np.float64).reshape(np.shape(pred))
    return {"mae": float(np.mean(np.abs(diff))), "mse": float(np.mean(diff * diff))}
