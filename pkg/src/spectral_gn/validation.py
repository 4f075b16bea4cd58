"""Input checks shared by the estimators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ShapeMismatch, WidthMismatch
from .graph import Graph


@dataclass(frozen=True, eq=False)
class SpectralSample:
    """A spatial graph paired with its (precomputed) spectral graph."""

    graph: Graph
    spectral: Optional[object] = None


def _unwrap(x):
    # LabeledSample and SpectralSample both expose ``.graph``
    if isinstance(x, Graph):
        return x
    g = getattr(x, "graph", None)
    if isinstance(g, Graph):
        return g
    raise TypeError(f"expected a Graph, got {type(x).__name__}")


def check_graphs(X, allow_empty: bool = False) -> list:
    """Return ``X`` as a list of graphs/spectral samples with uniform widths."""
    if isinstance(X, (Graph, SpectralSample)):
        X = [X]
    items = list(X)
    if not items and not allow_empty:
        raise ValueError("need at least one graph")
    widths = {_unwrap(x).widths for x in items}
    if len(widths) > 1:
        raise WidthMismatch(f"graphs disagree on feature widths: {sorted(widths)}")
    return [x if isinstance(x, SpectralSample) else _unwrap(x) for x in items]


def graph_widths(X) -> tuple:
    return _unwrap(X[0]).widths


def check_node_labels(X, y) -> list:
    """One binary vector per graph, each as long as its vertex count."""
    if len(y) != len(X):
        raise ShapeMismatch(f"{len(y)} label vectors for {len(X)} graphs")
    out = []
    for x, labels in zip(X, y):
        labels = np.asarray(labels).reshape(-1)
        if labels.shape[0] != _unwrap(x).n_nodes:
            raise ShapeMismatch("node labels must have one entry per vertex")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("node labels must be 0/1")
        out.append(labels.astype(np.int64))
    return out


def check_graph_targets(X, y, dtype=np.float64) -> np.ndarray:
    y = np.asarray(y, dtype=dtype)
    if y.shape[0] != len(X):
        raise ShapeMismatch(f"{y.shape[0]} targets for {len(X)} graphs")
    return y
