"""Vertex and edge perturbations applied to samples and graphs."""
from __future__ import annotations

import numpy as np

from ..exceptions import EmptyGraph
from ..graph import Graph, induced_subgraph, neighbors
from .paths import bfs_path
from .samples import LabeledSample, make_rng


def _remove_vertices(s: LabeledSample, keep: np.ndarray) -> LabeledSample:
    if not keep.any():
        raise EmptyGraph("perturbation removed every vertex")
    g = induced_subgraph(s.graph, keep)
    label = s.label[keep] if s.kind == "node" else s.label
    return LabeledSample(g, label, s.kind, dict(s.meta))


def uniform_vertex_dropout(s: LabeledSample, p: float, rng=None) -> LabeledSample:
    """Remove each vertex independently with probability ``p``."""
    if not 0.0 <= p < 1.0:
        raise ValueError("dropout probability must lie in [0, 1)")
    if p == 0.0:
        return s
    rng = make_rng(rng)
    keep = rng.random(s.graph.n_nodes) >= p
    return _remove_vertices(s, keep)


def shortest_path_vertex_dropout(s: LabeledSample, n_paths: int, rng=None,
                                 max_resample: int = 10) -> LabeledSample:
    """Cut ``n_paths`` holes, each the full vertex set of one BFS shortest path.

    Endpoints are removed too.  A disconnected pair is redrawn up to
    ``max_resample`` times before that path is skipped.
    """
    if n_paths < 0:
        raise ValueError("n_paths must be >= 0")
    rng = make_rng(rng)
    for _ in range(n_paths):
        g = s.graph
        if g.n_nodes < 2:
            raise EmptyGraph("too few vertices left to pick a pair")
        adj = neighbors(g)
        path = None
        for _ in range(max_resample):
            a, b = (int(v) for v in rng.choice(g.n_nodes, size=2, replace=False))
            path = bfs_path(adj, a, b)
            if path is not None:
                break
        if path is None:
            continue
        keep = np.ones(g.n_nodes, dtype=bool)
        keep[path] = False
        s = _remove_vertices(s, keep)
    return s


def edge_dropout(g: Graph, fraction: float, rng=None) -> Graph:
    """Remove ``floor(fraction * #pairs)`` undirected edge pairs uniformly."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    lo = np.minimum(g.senders, g.receivers)
    hi = np.maximum(g.senders, g.receivers)
    pair_keys = lo * max(g.n_nodes, 1) + hi
    unique = np.unique(pair_keys)
    n_drop = int(np.floor(fraction * len(unique) + 1e-12))
    if n_drop == 0:
        return g
    rng = make_rng(rng)
    dropped = rng.choice(unique, size=n_drop, replace=False)
    keep = ~np.isin(pair_keys, dropped)
    return g.replace(senders=g.senders[keep], receivers=g.receivers[keep], edge_feats=g.edge_feats[keep])


def edge_dropout_sample(s: LabeledSample, fraction: float, rng=None) -> LabeledSample:
    return s.with_graph(edge_dropout(s.graph, fraction, rng))


PERTURBATIONS = ("uniform-vertex-dropout", "shortest-path-dropout", "edge-dropout")


def perturb(s: LabeledSample, kind: str, amount, rng=None) -> LabeledSample:
    if kind == "uniform-vertex-dropout":
        return uniform_vertex_dropout(s, float(amount), rng)
    if kind == "shortest-path-dropout":
        return shortest_path_vertex_dropout(s, int(amount), rng)
    if kind == "edge-dropout":
        return edge_dropout_sample(s, float(amount), rng)
    raise ValueError(f"unknown perturbation {kind!r}; expected one of {PERTURBATIONS}")
