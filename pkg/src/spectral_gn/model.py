"""The Spectral GN network and the plain GN/GCN baseline it extends.

A forward pass runs on a :class:`ModelBatch`: the disjoint union of the
spatial graphs, the disjoint union of their spectral graphs, and the
block-diagonal projection matrix linking the two.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .autodiff import Tensor, concat_cols, segment_mean
from .blocks import (GCNLayerParams, GNBlockParams, Latents, Topology, apply_block,
                     create_block, normalized_adjacency)
from .exceptions import ConfigError, ShapeMismatch, WidthMismatch
from .graph import Graph, disjoint_union
from .nn import MLPParams, ModelParams, mlp_sizes
from .spectral import eigenbroadcast, eigenpool, spectral_basis, spectral_bases, threshold_basis

TASKS = ("graph-class", "node-binary", "graph-regress")
SPATIAL_KINDS = ("gn", "gcn", "node")
SPECTRAL_KINDS = ("gn", "gcn", "gft", "node")


@dataclass
class SpectralGNConfig:
    """Architecture settings.  ``k=0`` disables the spectral pathway."""

    k: int = 4
    threshold: bool = False
    n_steps: int = 3
    spatial_block: str = "gn"
    spectral_block: str = "gn"
    latent_size: int = 64
    hidden_size: int = 64
    n_hidden: int = 2
    aggregation: str = "sum"
    spectral_global: bool = True
    share_weights: bool = False
    task: str = "graph-class"
    n_outputs: int = 1
    eigensolver: str = "jacobi"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.k < 0:
            raise ConfigError("k must be >= 0")
        if self.n_steps < 0:
            raise ConfigError("n_steps must be >= 0")
        if self.spatial_block not in SPATIAL_KINDS:
            raise ConfigError(f"spatial_block must be one of {SPATIAL_KINDS}")
        if self.spectral_block not in SPECTRAL_KINDS:
            raise ConfigError(f"spectral_block must be one of {SPECTRAL_KINDS}")
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}")
        if self.aggregation not in ("sum", "mean"):
            raise ConfigError("aggregation must be 'sum' or 'mean'")
        if self.eigensolver not in ("jacobi", "lapack", "auto"):
            raise ConfigError("eigensolver must be 'jacobi', 'lapack' or 'auto'")
        if min(self.latent_size, self.hidden_size, self.n_outputs) < 1 or self.n_hidden < 0:
            raise ConfigError("widths must be positive")

    @property
    def n_spectral(self) -> int:
        return 2 * self.k if self.threshold else self.k

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralGNConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# spectral input -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralGraph:
    """Complete graph on C spectral vertices plus the projection matrix.

    ``projection`` has one row per spatial vertex and one column per
    spectral vertex; vertex c carries ``eigvals[c]`` as its only feature.
    """

    graph: Graph
    projection: np.ndarray
    eigvals: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.eigvals.shape[0]


def complete_edges(c: int) -> np.ndarray:
    idx = np.arange(c)
    s, r = np.meshgrid(idx, idx, indexing="ij")
    mask = s != r
    return np.stack([s[mask], r[mask]], axis=1)


def build_spectral_input(basis) -> SpectralGraph:
    """Spectral graph from a :class:`SpectralBasis` or :class:`ThresholdedBasis`."""
    vals = np.asarray(basis.eigvals, dtype=np.float64)
    c = vals.shape[0]
    edges = complete_edges(c)
    g = Graph(vals.reshape(c, 1), edges[:, 0], edges[:, 1], np.zeros((len(edges), 1)), np.zeros(1))
    return SpectralGraph(g, np.asarray(basis.projection, dtype=np.float64), vals)


def resolve_solver(method: str, n_nodes: int) -> str:
    if method == "auto":
        return "jacobi" if n_nodes <= 128 else "lapack"
    return method


def spectral_input(g: Graph, k: int, threshold: bool = False, eigensolver: str = "jacobi",
                   basis_graph: Optional[Graph] = None) -> Optional[SpectralGraph]:
    """Compute the spectral graph for ``g``.

    ``basis_graph`` (same vertex set) supplies the Laplacian instead of
    ``g``; the edge-dropout protocol uses the unperturbed graph here.
    """
    if k == 0:
        return None
    source = g if basis_graph is None else basis_graph
    if source.n_nodes != g.n_nodes:
        raise ShapeMismatch("basis graph must have the same vertices as the input graph")
    basis = spectral_basis(source, k, method=resolve_solver(eigensolver, source.n_nodes))
    if threshold:
        basis = threshold_basis(basis)
    return build_spectral_input(basis)


def spectral_inputs(graphs: Sequence[Graph], k: int, threshold: bool = False,
                    eigensolver: str = "jacobi") -> list:
    """:func:`spectral_input` for many graphs, batching the Jacobi solves."""
    graphs = list(graphs)
    if k == 0:
        return [None] * len(graphs)
    out = [None] * len(graphs)
    groups = {}
    for i, g in enumerate(graphs):
        groups.setdefault(resolve_solver(eigensolver, g.n_nodes), []).append(i)
    for method, idx in groups.items():
        for i, basis in zip(idx, spectral_bases([graphs[i] for i in idx], k, method)):
            out[i] = build_spectral_input(threshold_basis(basis) if threshold else basis)
    return out


# batching -------------------------------------------------------------------

@dataclass(eq=False)
class ModelBatch:
    spatial: object
    topology: Topology
    spectral: Optional[object] = None
    spectral_topology: Optional[Topology] = None
    projection: Optional[sp.csr_matrix] = None
    _adjacency: dict = field(default_factory=dict)

    @property
    def n_graphs(self) -> int:
        return self.topology.n_graphs

    def adjacency(self, which: str):
        if which not in self._adjacency:
            topo = self.topology if which == "spatial" else self.spectral_topology
            self._adjacency[which] = normalized_adjacency(topo)
        return self._adjacency[which]


def make_batch(graphs: Sequence[Graph], spectral: Optional[Sequence[SpectralGraph]] = None) -> ModelBatch:
    batch = disjoint_union(graphs)
    out = ModelBatch(batch, Topology.from_batch(batch))
    if spectral is not None and len(spectral) and spectral[0] is not None:
        if len(spectral) != len(graphs):
            raise ShapeMismatch("one spectral graph per spatial graph is required")
        for g, s in zip(graphs, spectral):
            if s.projection.shape[0] != g.n_nodes:
                raise ShapeMismatch("projection rows must match spatial vertex count")
        sbatch = disjoint_union([s.graph for s in spectral])
        out.spectral = sbatch
        out.spectral_topology = Topology.from_batch(sbatch)
        out.projection = sp.block_diag([s.projection for s in spectral], format="csr")
    return out


# shared pieces --------------------------------------------------------------

@dataclass
class Encoder:
    node: MLPParams
    edge: MLPParams
    glob: MLPParams

    @classmethod
    def create(cls, store, name, widths, cfg: SpectralGNConfig, rng):
        d_v, d_e, d_g = widths
        sizes = lambda d: mlp_sizes(d, cfg.hidden_size, cfg.n_hidden, cfg.latent_size)  # noqa: E731
        return cls(MLPParams.create(store, f"{name}/node", sizes(d_v), rng),
                   MLPParams.create(store, f"{name}/edge", sizes(d_e), rng),
                   MLPParams.create(store, f"{name}/global", sizes(d_g), rng))

    def __call__(self, batch) -> Latents:
        return Latents(self.node(Tensor(batch.node_feats)),
                       self.edge(Tensor(batch.edge_feats)),
                       self.glob(Tensor(batch.global_feats)))


def _readout(cfg: SpectralGNConfig, topo: Topology, h: Latents) -> Tensor:
    if cfg.spatial_block == "gn":
        return h.globals
    return segment_mean(h.nodes, topo.node_graph, topo.n_graphs)


def _create_decoder(store, cfg, rng):
    return MLPParams.create(store, "decoder", mlp_sizes(cfg.latent_size, cfg.hidden_size, cfg.n_hidden,
                                                        cfg.n_outputs), rng)


def _decode(decoder, cfg, topo, h: Latents) -> Tensor:
    if cfg.task == "node-binary":
        return decoder(h.nodes)
    return decoder(_readout(cfg, topo, h))


def _check_widths(batch, widths):
    got = (batch.node_feats.shape[1], batch.edge_feats.shape[1], batch.global_feats.shape[1])
    if got != tuple(widths):
        raise WidthMismatch(f"model built for feature widths {tuple(widths)}, got {got}")


class SpectralGN:
    """Spatial GNN and spectral GNN coupled by eigenpooling/broadcasting.

    Parameters
    ----------
    config : SpectralGNConfig
    widths : tuple (d_v, d_e, d_g)
        Input feature widths of the spatial graphs.
    seed : int
        Seeds the Glorot initialisation.
    """

    def __init__(self, config: SpectralGNConfig, widths, seed: int = 0):
        self.config = config
        self.widths = tuple(int(w) for w in widths)
        self.params = ModelParams()
        rng = np.random.default_rng(seed)
        cfg = config
        latent = cfg.latent_size
        self.encoder = Encoder.create(self.params, "encoder", self.widths, cfg, rng)
        self.spectral_encoder = None
        if cfg.k > 0:
            self.spectral_encoder = Encoder.create(self.params, "spectral_encoder", (1, 1, 1), cfg, rng)
        self.steps = []
        n_distinct = min(cfg.n_steps, 1) if cfg.share_weights else cfg.n_steps
        for m in range(n_distinct):
            step = {"spatial": create_block(cfg.spatial_block, self.params, f"step{m}/spatial", latent, rng,
                                            cfg.hidden_size, cfg.n_hidden, cfg.aggregation, True)}
            if cfg.k > 0:
                step["spectral"] = create_block(cfg.spectral_block, self.params, f"step{m}/spectral", latent,
                                                rng, cfg.hidden_size, cfg.n_hidden, cfg.aggregation,
                                                cfg.spectral_global, k=cfg.n_spectral)
                step["reduce_spatial"] = MLPParams.create(self.params, f"step{m}/reduce_spatial",
                                                          [2 * latent, latent], rng, activate_final=True)
                step["reduce_spectral"] = MLPParams.create(self.params, f"step{m}/reduce_spectral",
                                                           [2 * latent, latent], rng, activate_final=True)
            self.steps.append(step)
        self.decoder = _create_decoder(self.params, cfg, rng)

    def step_params(self, m: int) -> dict:
        return self.steps[0] if self.config.share_weights else self.steps[m]

    def encode(self, batch: ModelBatch):
        _check_widths(batch.spatial, self.widths)
        G = self.encoder(batch.spatial)
        S = self.spectral_encoder(batch.spectral) if self.spectral_encoder is not None else None
        return G, S

    def step(self, m: int, batch: ModelBatch, G: Latents, S: Optional[Latents]):
        """One coupled message-passing round; returns ``(G_next, S_next)``."""
        p = self.step_params(m)
        adj = batch.adjacency("spatial") if self.config.spatial_block == "gcn" else None
        G_hat = apply_block(p["spatial"], batch.topology, G, adjacency=adj)
        if S is None:
            return G_hat, None
        adj = batch.adjacency("spectral") if self.config.spectral_block == "gcn" else None
        S_hat = apply_block(p["spectral"], batch.spectral_topology, S, adjacency=adj)
        P = batch.projection
        pooled = eigenpool(P, G.nodes)
        broadcast = eigenbroadcast(P, S.nodes)
        S_next = S_hat.replace(nodes=p["reduce_spectral"](concat_cols([S_hat.nodes, pooled])))
        G_next = G_hat.replace(nodes=p["reduce_spatial"](concat_cols([G_hat.nodes, broadcast])))
        return G_next, S_next

    def decode(self, batch: ModelBatch, G: Latents) -> Tensor:
        return _decode(self.decoder, self.config, batch.topology, G)

    def forward(self, batch: ModelBatch) -> Tensor:
        if self.config.k > 0 and batch.projection is None:
            raise ShapeMismatch("k > 0 requires spectral inputs in the batch")
        if batch.projection is not None and batch.projection.shape[1] != batch.n_graphs * self.config.n_spectral:
            raise ShapeMismatch("spectral vertex count does not match the model's k/threshold setting")
        G, S = self.encode(batch)
        for m in range(self.config.n_steps):
            G, S = self.step(m, batch, G, S)
        return self.decode(batch, G)

    __call__ = forward


class GraphNetBaseline:
    """Encoder, M spatial blocks and decoder; no spectral pathway at all.

    Parameter creation order matches :class:`SpectralGN` with ``k=0``, so the
    same seed gives the same weights.
    """

    def __init__(self, config: SpectralGNConfig, widths, seed: int = 0):
        self.config = config
        self.widths = tuple(int(w) for w in widths)
        self.params = ModelParams()
        rng = np.random.default_rng(seed)
        cfg = config
        self.encoder = Encoder.create(self.params, "encoder", self.widths, cfg, rng)
        n_distinct = min(cfg.n_steps, 1) if cfg.share_weights else cfg.n_steps
        self.blocks = [create_block(cfg.spatial_block, self.params, f"step{m}/spatial", cfg.latent_size, rng,
                                    cfg.hidden_size, cfg.n_hidden, cfg.aggregation, True)
                       for m in range(n_distinct)]
        self.decoder = _create_decoder(self.params, cfg, rng)

    def forward(self, batch: ModelBatch) -> Tensor:
        _check_widths(batch.spatial, self.widths)
        h = self.encoder(batch.spatial)
        adj = normalized_adjacency(batch.topology) if self.config.spatial_block == "gcn" else None
        for m in range(self.config.n_steps):
            block = self.blocks[0] if self.config.share_weights else self.blocks[m]
            h = apply_block(block, batch.topology, h, adjacency=adj)
        return _decode(self.decoder, self.config, batch.topology, h)

    __call__ = forward


__all__ = [
    "GCNLayerParams", "GNBlockParams", "GraphNetBaseline", "ModelBatch", "SpectralGN",
    "SpectralGNConfig", "SpectralGraph", "build_spectral_input", "complete_edges", "make_batch",
    "spectral_input", "spectral_inputs",
]
