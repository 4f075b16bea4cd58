"""Message-passing blocks: GN, GCN, GFT and the node-only ablation.

All blocks work on a batch of graphs described by a :class:`Topology`
(static index arrays) and :class:`Latents` (differentiable features).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .autodiff import (Tensor, add, concat_cols, gather_rows, matmul, relu, reshape,
                       segment_mean, segment_sum, slice_rows, const_matmul)
from .exceptions import NonSymmetricGraph, ShapeMismatch
from .nn import MLPParams, ModelParams, glorot_uniform, mlp_continue, mlp_sizes


@dataclass(frozen=True, eq=False)
class Topology:
    """Index structure of a batch of graphs."""

    senders: np.ndarray
    receivers: np.ndarray
    node_graph: np.ndarray
    edge_graph: np.ndarray
    n_graphs: int

    @property
    def n_nodes(self) -> int:
        return self.node_graph.shape[0]

    @property
    def n_edges(self) -> int:
        return self.senders.shape[0]

    @classmethod
    def from_batch(cls, batch) -> "Topology":
        return cls(batch.senders, batch.receivers, batch.node_graph, batch.edge_graph, batch.n_graphs)

    @classmethod
    def single(cls, n_nodes: int, senders, receivers) -> "Topology":
        senders = np.asarray(senders, dtype=np.int64)
        return cls(senders, np.asarray(receivers, dtype=np.int64),
                   np.zeros(n_nodes, dtype=np.int64), np.zeros(senders.shape[0], dtype=np.int64), 1)


@dataclass(frozen=True, eq=False)
class Latents:
    nodes: Tensor
    edges: Tensor
    globals: Tensor

    def replace(self, nodes=None, edges=None, globals=None) -> "Latents":
        return Latents(self.nodes if nodes is None else nodes,
                       self.edges if edges is None else edges,
                       self.globals if globals is None else globals)


# GN -------------------------------------------------------------------------

@dataclass
class GNBlockParams:
    edge_mlp: MLPParams
    node_mlp: MLPParams
    global_mlp: Optional[MLPParams]
    aggregation: str = "sum"

    @property
    def use_global(self) -> bool:
        return self.global_mlp is not None

    @classmethod
    def create(cls, store: ModelParams, name: str, d_v, d_e, d_g, out, rng,
               hidden=64, n_hidden=2, aggregation="sum", use_global=True):
        gw = d_g if use_global else 0
        edge = MLPParams.create(store, f"{name}/edge", mlp_sizes(d_e + 2 * d_v + gw, hidden, n_hidden, out), rng)
        node = MLPParams.create(store, f"{name}/node", mlp_sizes(d_v + out + gw, hidden, n_hidden, out), rng)
        glob = None
        if use_global:
            glob = MLPParams.create(store, f"{name}/global", mlp_sizes(d_g + 2 * out, hidden, n_hidden, out), rng)
        return cls(edge, node, glob, aggregation)


def _aggregate(x, ids, n, how):
    if how == "sum":
        return segment_sum(x, ids, n)
    if how == "mean":
        return segment_mean(x, ids, n)
    raise ValueError(f"unknown aggregation {how!r}")


def _edge_update(p: GNBlockParams, topo: Topology, h: Latents) -> Tensor:
    # phi_e(concat[e, v_s, v_r, g]) with the first layer split by input block:
    # node and global terms are projected once per node/graph, then gathered.
    d_e, d_v = h.edges.shape[1], h.nodes.shape[1]
    W = p.edge_mlp.weights[0]
    if W.shape[0] != d_e + 2 * d_v + (h.globals.shape[1] if p.use_global else 0):
        raise ShapeMismatch(f"edge MLP expects input width {W.shape[0]}")
    pre = matmul(h.edges, slice_rows(W, 0, d_e))
    pre = add(pre, gather_rows(matmul(h.nodes, slice_rows(W, d_e, d_e + d_v)), topo.senders))
    pre = add(pre, gather_rows(matmul(h.nodes, slice_rows(W, d_e + d_v, d_e + 2 * d_v)), topo.receivers))
    if p.use_global:
        pre = add(pre, gather_rows(matmul(h.globals, slice_rows(W, d_e + 2 * d_v, W.shape[0])),
                                   topo.edge_graph))
    return mlp_continue(p.edge_mlp, add(pre, p.edge_mlp.biases[0]))


def gn_block(p: GNBlockParams, topo: Topology, h: Latents) -> Latents:
    """Full GN update: edges, then nodes from aggregated edges, then globals.

    Per-receiver aggregation follows ``p.aggregation``; the global update
    always pools node and edge updates by their mean.
    """
    edges = _edge_update(p, topo, h)

    agg = _aggregate(edges, topo.receivers, topo.n_nodes, p.aggregation)
    inputs = [h.nodes, agg]
    if p.use_global:
        inputs.append(gather_rows(h.globals, topo.node_graph))
    nodes = p.node_mlp(concat_cols(inputs))

    globals_ = h.globals
    if p.use_global:
        pooled_v = segment_mean(nodes, topo.node_graph, topo.n_graphs)
        pooled_e = segment_mean(edges, topo.edge_graph, topo.n_graphs)
        globals_ = p.global_mlp(concat_cols([h.globals, pooled_v, pooled_e]))
    return Latents(nodes, edges, globals_)


# GCN ------------------------------------------------------------------------

@dataclass
class GCNLayerParams:
    weight: Tensor
    bias: Tensor

    @classmethod
    def create(cls, store: ModelParams, name: str, d_in, d_out, rng):
        return cls(store.new(f"{name}/w", glorot_uniform(rng, d_in, d_out)),
                   store.new(f"{name}/b", np.zeros((1, d_out))))


def normalized_adjacency(topo: Topology):
    """``D^-1/2 (A + I) D^-1/2`` as a sparse matrix, A binarised."""
    n = topo.n_nodes
    A = sp.csr_matrix((np.ones(topo.n_edges), (topo.senders, topo.receivers)), shape=(n, n))
    A.data[:] = 1.0  # duplicates were summed; binarise
    if (A != A.T).nnz:
        raise NonSymmetricGraph("GCN requires a symmetric edge set")
    A = A.tolil()
    A.setdiag(1.0)
    A = A.tocsr()
    d = np.asarray(A.sum(axis=1)).reshape(-1)
    scale = sp.diags(1.0 / np.sqrt(d))
    return (scale @ A @ scale).tocsr()


def gcn_layer(p: GCNLayerParams, topo: Topology, h: Latents, activation: bool = True,
              adjacency=None) -> Latents:
    """Kipf-Welling propagation ``ReLU(A_hat X W + b)``; edges/globals pass through."""
    A_hat = normalized_adjacency(topo) if adjacency is None else adjacency
    out = add(matmul(const_matmul(A_hat, h.nodes), p.weight), p.bias)
    if activation:
        out = relu(out)
    return h.replace(nodes=out)


# GFT ------------------------------------------------------------------------

@dataclass
class GFTBlockParams:
    mlp: MLPParams
    k: int
    d_out: int

    @classmethod
    def create(cls, store: ModelParams, name: str, k, d_in, d_out, rng, hidden=64, n_hidden=2):
        mlp = MLPParams.create(store, f"{name}/mlp", mlp_sizes(k * d_in, hidden, n_hidden, k * d_out), rng)
        return cls(mlp, k, d_out)


def gft_block(p: GFTBlockParams, latents, eigvals=None, n_graphs: int = 1) -> Tensor:
    """MLP over the eigenvalue-ordered spectral latents of each graph.

    ``latents`` holds ``n_graphs`` consecutive groups of rows, each already in
    ascending-eigenvalue order.  A single graph whose row count differs from
    ``k`` is zero-padded or truncated to ``k`` rows.
    """
    x = latents if isinstance(latents, Tensor) else Tensor(latents)
    rows, d = x.shape
    if eigvals is not None and np.size(eigvals) != rows:
        raise ShapeMismatch(f"{np.size(eigvals)} eigenvalues for {rows} spectral rows")
    if n_graphs == 1 and rows != p.k:
        if rows < p.k:
            x = _pad_rows(x, p.k - rows)
        else:
            x = gather_rows(x, np.arange(p.k))
        rows = p.k
    if rows != n_graphs * p.k or d * p.k != p.mlp.in_width:
        raise ShapeMismatch(f"GFT block expects {n_graphs}x{p.k} rows of width {p.mlp.in_width // p.k}")
    flat = reshape(x, (n_graphs, p.k * d))
    return reshape(p.mlp(flat), (n_graphs * p.k, p.d_out))


def _pad_rows(x: Tensor, extra: int) -> Tensor:
    from .autodiff import _make

    rows, d = x.shape
    data = np.concatenate([x.data, np.zeros((extra, d))], axis=0)
    return _make(data, (x,), lambda g: x._accumulate(g[:rows]))


def gft_apply(p: GFTBlockParams, topo: Topology, h: Latents) -> Latents:
    return h.replace(nodes=gft_block(p, h.nodes, n_graphs=topo.n_graphs))


# node-only ------------------------------------------------------------------

@dataclass
class NodeOnlyParams:
    node_mlp: MLPParams

    @classmethod
    def create(cls, store: ModelParams, name: str, d_in, d_out, rng, hidden=64, n_hidden=2):
        return cls(MLPParams.create(store, f"{name}/node", mlp_sizes(d_in, hidden, n_hidden, d_out), rng))


def node_only_block(p: NodeOnlyParams, topo: Topology, h: Latents) -> Latents:
    """Per-node MLP; no information moves between nodes."""
    return h.replace(nodes=p.node_mlp(h.nodes))


BLOCK_KINDS = ("gn", "gcn", "gft", "node")


def create_block(kind: str, store, name, latent, rng, hidden=64, n_hidden=2,
                 aggregation="sum", use_global=True, k=None):
    if kind == "gn":
        return GNBlockParams.create(store, name, latent, latent, latent, latent, rng, hidden,
                                    n_hidden, aggregation, use_global)
    if kind == "gcn":
        return GCNLayerParams.create(store, name, latent, latent, rng)
    if kind == "gft":
        return GFTBlockParams.create(store, name, k, latent, latent, rng, hidden, n_hidden)
    if kind == "node":
        return NodeOnlyParams.create(store, name, latent, latent, rng, hidden, n_hidden)
    raise ValueError(f"unknown block kind {kind!r}; expected one of {BLOCK_KINDS}")


def apply_block(params, topo: Topology, h: Latents, adjacency=None) -> Latents:
    if isinstance(params, GNBlockParams):
        return gn_block(params, topo, h)
    if isinstance(params, GCNLayerParams):
        return gcn_layer(params, topo, h, adjacency=adjacency)
    if isinstance(params, GFTBlockParams):
        return gft_apply(params, topo, h)
    if isinstance(params, NodeOnlyParams):
        return node_only_block(params, topo, h)
    raise TypeError(f"not a block: {type(params).__name__}")
