"""Graph container, dense adjacency/Laplacian construction and batching.

Graphs store directed edges as parallel ``senders``/``receivers`` index
arrays.  Every dataset in this package is symmetric and loop-free; that is
validated before any spectral quantity is computed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .exceptions import InvalidGraph, NonSymmetricGraph, SelfLoop, WidthMismatch

MAX_DENSE_NODES = 1024


def _as_matrix(values, rows: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((rows, 0 if arr.ndim < 2 else arr.shape[1]))
    if arr.ndim == 1:
        arr = arr.reshape(rows, -1)
    if arr.ndim != 2 or arr.shape[0] != rows:
        raise InvalidGraph(f"{name} must have {rows} rows, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """A directed graph with node, edge and global features.

    Parameters
    ----------
    node_feats : array of shape (n_nodes, d_v)
    senders, receivers : int arrays of shape (n_edges,)
    edge_feats : array of shape (n_edges, d_e)
    global_feats : array of shape (d_g,)
    pos : optional array of shape (n_nodes, 2)
        Vertex positions, used by the generators and never by the model.
    """

    node_feats: np.ndarray
    senders: np.ndarray
    receivers: np.ndarray
    edge_feats: np.ndarray
    global_feats: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pos: Optional[np.ndarray] = None

    def __post_init__(self):
        nf = np.asarray(self.node_feats, dtype=np.float64)
        if nf.ndim != 2:
            raise InvalidGraph(f"node_feats must be 2-D, got shape {nf.shape}")
        n = nf.shape[0]
        s = np.asarray(self.senders, dtype=np.int64).reshape(-1)
        r = np.asarray(self.receivers, dtype=np.int64).reshape(-1)
        if s.shape != r.shape:
            raise InvalidGraph("senders and receivers differ in length")
        if s.size and (s.min() < 0 or r.min() < 0 or s.max() >= n or r.max() >= n):
            raise InvalidGraph(f"edge index out of range [0, {n})")
        ef = _as_matrix(self.edge_feats, s.size, "edge_feats")
        g = np.asarray(self.global_feats, dtype=np.float64).reshape(-1)
        pos = None
        if self.pos is not None:
            pos = _as_matrix(self.pos, n, "pos")
        for name, value in (("node_feats", nf), ("senders", s), ("receivers", r),
                            ("edge_feats", ef), ("global_feats", g), ("pos", pos)):
            if value is not None:
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_edges(cls, n_nodes, edges, node_feats=None, edge_feats=None,
                   global_feats=None, pos=None) -> "Graph":
        """Build a graph from ``(sender, receiver)`` pairs.

        Missing node/edge/global features default to zero-width arrays.
        """
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if node_feats is None:
            node_feats = np.zeros((n_nodes, 0))
        if edge_feats is None:
            edge_feats = np.zeros((len(pairs), 0))
        if global_feats is None:
            global_feats = np.zeros(0)
        return cls(node_feats, pairs[:, 0], pairs[:, 1], edge_feats, global_feats, pos)

    @property
    def n_nodes(self) -> int:
        return self.node_feats.shape[0]

    @property
    def n_edges(self) -> int:
        return self.senders.shape[0]

    @property
    def widths(self) -> tuple:
        return self.node_feats.shape[1], self.edge_feats.shape[1], self.global_feats.shape[0]

    def edge_list(self) -> list:
        return list(zip(self.senders.tolist(), self.receivers.tolist()))

    def replace(self, **changes) -> "Graph":
        values = dict(node_feats=self.node_feats, senders=self.senders,
                      receivers=self.receivers, edge_feats=self.edge_feats,
                      global_feats=self.global_feats, pos=self.pos)
        values.update(changes)
        return Graph(**values)

    def equals(self, other: "Graph") -> bool:
        """Exact (bitwise) equality of structure and features."""
        if (self.pos is None) != (other.pos is None):
            return False
        pairs = [(self.node_feats, other.node_feats), (self.senders, other.senders),
                 (self.receivers, other.receivers), (self.edge_feats, other.edge_feats),
                 (self.global_feats, other.global_feats)]
        if self.pos is not None:
            pairs.append((self.pos, other.pos))
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)

    def __repr__(self):
        dv, de, dg = self.widths
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges}, d_v={dv}, d_e={de}, d_g={dg})"


def adjacency(g: Graph) -> np.ndarray:
    """Binary adjacency with ``A[i, j] = 1`` iff an edge i -> j exists."""
    n = g.n_nodes
    if n > MAX_DENSE_NODES:
        raise InvalidGraph(f"dense adjacency limited to {MAX_DENSE_NODES} nodes, got {n}")
    A = np.zeros((n, n))
    A[g.senders, g.receivers] = 1.0
    return A


def has_self_loops(g: Graph) -> bool:
    return bool(np.any(g.senders == g.receivers))


def is_symmetric(g: Graph) -> bool:
    A = adjacency(g)
    return bool(np.array_equal(A, A.T))


def validate_simple(g: Graph) -> None:
    """Raise unless ``g`` is symmetric and free of self-loops."""
    if has_self_loops(g):
        raise SelfLoop("graph contains an i -> i edge")
    if not is_symmetric(g):
        raise NonSymmetricGraph("edge (i, j) present without (j, i)")


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``L = D - A`` of a symmetric, loop-free graph."""
    validate_simple(g)
    A = adjacency(g)
    return np.diag(A.sum(axis=1)) - A


def degrees(g: Graph) -> np.ndarray:
    return np.bincount(g.senders, minlength=g.n_nodes)


def neighbors(g: Graph) -> list:
    """Sorted out-neighbour lists, one per vertex."""
    order = np.lexsort((g.receivers, g.senders))
    s, r = g.senders[order], g.receivers[order]
    bounds = np.searchsorted(s, np.arange(g.n_nodes + 1))
    return [r[bounds[i]:bounds[i + 1]].tolist() for i in range(g.n_nodes)]


def symmetric_edges(pairs: Iterable[tuple]) -> np.ndarray:
    """Expand undirected pairs into a sorted, deduplicated directed edge array."""
    out = set()
    for i, j in pairs:
        if i == j:
            continue
        out.add((int(i), int(j)))
        out.add((int(j), int(i)))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array(sorted(out), dtype=np.int64)


def induced_subgraph(g: Graph, keep: np.ndarray) -> Graph:
    """Keep the vertices flagged in the boolean mask ``keep``.

    Indices are compacted in their original order and every edge touching a
    removed vertex is dropped with it.
    """
    keep = np.asarray(keep, dtype=bool)
    new_index = np.full(g.n_nodes, -1, dtype=np.int64)
    new_index[keep] = np.arange(int(keep.sum()))
    emask = keep[g.senders] & keep[g.receivers]
    return Graph(
        g.node_feats[keep],
        new_index[g.senders[emask]],
        new_index[g.receivers[emask]],
        g.edge_feats[emask],
        g.global_feats,
        None if g.pos is None else g.pos[keep],
    )


@dataclass(frozen=True, eq=False)
class BatchedGraph:
    """Disjoint union of several graphs.

    ``node_graph``/``edge_graph`` map every node/edge to the index of the
    graph it came from; ``node_offsets``/``edge_offsets`` have length
    ``n_graphs + 1``.
    """

    node_feats: np.ndarray
    senders: np.ndarray
    receivers: np.ndarray
    edge_feats: np.ndarray
    global_feats: np.ndarray
    n_node: np.ndarray
    n_edge: np.ndarray
    positions: tuple = ()

    @property
    def n_graphs(self) -> int:
        return self.n_node.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.node_feats.shape[0]

    @property
    def n_edges(self) -> int:
        return self.senders.shape[0]

    @property
    def node_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.n_node)]).astype(np.int64)

    @property
    def edge_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.n_edge)]).astype(np.int64)

    @property
    def node_graph(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_graphs), self.n_node)

    @property
    def edge_graph(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_graphs), self.n_edge)

    def as_graph(self) -> Graph:
        """View the union as one graph (globals of the first member)."""
        g = self.global_feats[0] if self.n_graphs else np.zeros(0)
        return Graph(self.node_feats, self.senders, self.receivers, self.edge_feats, g)

    def unbatch(self) -> list:
        no, eo = self.node_offsets, self.edge_offsets
        out = []
        for b in range(self.n_graphs):
            sl_n, sl_e = slice(no[b], no[b + 1]), slice(eo[b], eo[b + 1])
            pos = self.positions[b] if self.positions else None
            out.append(Graph(
                self.node_feats[sl_n].copy(),
                self.senders[sl_e] - no[b],
                self.receivers[sl_e] - no[b],
                self.edge_feats[sl_e].copy(),
                self.global_feats[b].copy(),
                None if pos is None else pos.copy(),
            ))
        return out


def disjoint_union(gs: Sequence[Graph]) -> BatchedGraph:
    """Batch graphs into one block-diagonal graph.

    Raises
    ------
    WidthMismatch
        If the graphs disagree on any feature width.
    """
    gs = list(gs)
    if not gs:
        raise InvalidGraph("cannot batch an empty list of graphs")
    widths = {g.widths for g in gs}
    if len(widths) != 1:
        raise WidthMismatch(f"feature widths differ across graphs: {sorted(widths)}")
    n_node = np.array([g.n_nodes for g in gs], dtype=np.int64)
    n_edge = np.array([g.n_edges for g in gs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(n_node)[:-1]])
    senders = np.concatenate([g.senders + o for g, o in zip(gs, offsets)])
    receivers = np.concatenate([g.receivers + o for g, o in zip(gs, offsets)])
    return BatchedGraph(
        node_feats=np.concatenate([g.node_feats for g in gs], axis=0),
        senders=senders.astype(np.int64),
        receivers=receivers.astype(np.int64),
        edge_feats=np.concatenate([g.edge_feats for g in gs], axis=0),
        global_feats=np.stack([g.global_feats for g in gs], axis=0),
        n_node=n_node,
        n_edge=n_edge,
        positions=tuple(g.pos for g in gs),
    )


def unbatch(batch: BatchedGraph) -> list:
    return batch.unbatch()


# JSON-lines interchange ----------------------------------------------------

def graph_to_record(g: Graph, labels: Optional[dict] = None, meta: Optional[dict] = None) -> dict:
    rec = {
        "n": g.n_nodes,
        "nf": g.node_feats.tolist(),
        "edges": np.stack([g.senders, g.receivers], axis=1).tolist(),
        "ef": g.edge_feats.tolist(),
        "g": g.global_feats.tolist(),
    }
    if g.pos is not None:
        rec["pos"] = g.pos.tolist()
    if labels is not None:
        rec["labels"] = labels
    if meta is not None:
        rec["meta"] = meta
    return rec


def graph_from_record(rec: dict) -> Graph:
    n = int(rec["n"])
    edges = np.asarray(rec.get("edges", []), dtype=np.int64).reshape(-1, 2)
    nf = np.asarray(rec.get("nf", []), dtype=np.float64).reshape(n, -1) if n else np.zeros((0, 0))
    ef = np.asarray(rec.get("ef", []), dtype=np.float64)
    ef = ef.reshape(len(edges), -1) if len(edges) else np.zeros((0, ef.shape[1] if ef.ndim == 2 else 0))
    pos = rec.get("pos")
    return Graph(nf, edges[:, 0], edges[:, 1], ef, np.asarray(rec.get("g", []), dtype=np.float64),
                 None if pos is None else np.asarray(pos, dtype=np.float64))


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"), sort_keys=True)


def write_jsonl(path, records: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps_record(rec))
            fh.write("\n")
            count += 1
    return count


def read_jsonl(path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)
