"""Random graph families and the shortest-path vertex labelling task."""
from __future__ import annotations

import numpy as np

from ..exceptions import ConnectivityFailure, DegenerateInput, DisconnectedPair
from ..graph import Graph, neighbors, symmetric_edges
from .delaunay import triangle_edges, triangulate
from .paths import UNREACHED, bfs_distances, is_connected
from .samples import LabeledSample, make_rng

GRID_BITS = 20


def _graph(n, pairs, pos=None, edge_width=0):
    edges = symmetric_edges(pairs)
    if pos is not None:
        ef = pos[edges[:, 1]] - pos[edges[:, 0]] if len(edges) else np.zeros((0, 2))
    else:
        ef = np.zeros((len(edges), edge_width))
    return Graph(np.zeros((n, 0)), edges[:, 0], edges[:, 1], ef, np.zeros(0), pos)


def barabasi_albert_tree(n: int, rng=None) -> Graph:
    """Preferential-attachment tree: each new vertex links to one existing
    vertex chosen with probability proportional to its degree."""
    if n < 2:
        raise ValueError("a Barabasi-Albert tree needs n >= 2")
    rng = make_rng(rng)
    pairs = [(0, 1)]
    # every edge endpoint once: sampling uniformly from it is degree-proportional
    endpoints = [0, 1]
    for v in range(2, n):
        u = endpoints[int(rng.integers(len(endpoints)))]
        pairs.append((u, v))
        endpoints.extend((u, v))
    return _graph(n, pairs)


def uniform_random_tree(n: int, rng=None) -> Graph:
    """Random recursive tree (uniform attachment); a reference for BA trees."""
    rng = make_rng(rng)
    pairs = [(int(rng.integers(v)), v) for v in range(1, n)]
    return _graph(n, pairs)


def cluster_sizes(n: int, n_clusters: int) -> np.ndarray:
    base, extra = divmod(n, n_clusters)
    return np.array([base + (i < extra) for i in range(n_clusters)], dtype=np.int64)


def random_partition_graph(n: int, n_clusters: int = 4, p_in: float = 0.3, p_out: float = 0.01,
                           rng=None, max_tries: int = 100, require_connected: bool = True) -> Graph:
    """Planted-partition graph with evenly sized clusters.

    Raises
    ------
    ConnectivityFailure
        If ``require_connected`` and no connected sample is found within
        ``max_tries`` draws.
    """
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValueError("need 0 <= p_out <= p_in <= 1")
    rng = make_rng(rng)
    membership = np.repeat(np.arange(n_clusters), cluster_sizes(n, n_clusters))
    same = membership[:, None] == membership[None, :]
    prob = np.where(same, p_in, p_out)
    iu = np.triu_indices(n, k=1)
    for _ in range(max(max_tries, 1)):
        draw = rng.random(len(iu[0])) < prob[iu]
        g = _graph(n, zip(iu[0][draw], iu[1][draw]))
        if not require_connected or is_connected(g):
            return g
    raise ConnectivityFailure(f"no connected partition graph in {max_tries} tries")


def sample_grid_points(n: int, rng, bits: int = GRID_BITS) -> np.ndarray:
    """``n`` distinct integer points on a ``2**bits`` grid."""
    side = 2 ** bits
    pts = []
    seen = set()
    while len(pts) < n:
        x, y = (int(v) for v in rng.integers(0, side, size=2))
        if (x, y) not in seen:
            seen.add((x, y))
            pts.append((x, y))
    return np.array(pts, dtype=np.int64)


def delaunay_graph_from_points(ipts, bits: int = GRID_BITS) -> Graph:
    tris = triangulate(ipts)
    pos = np.asarray(ipts, dtype=np.float64) / 2 ** bits
    return _graph(len(ipts), triangle_edges(tris), pos)


def delaunay2d(n: int, rng=None, max_tries: int = 100) -> Graph:
    """Delaunay triangulation of ``n`` uniform points in the unit square.

    Points live on a ``2**20`` integer grid so that all geometric predicates
    are exact; positions are stored scaled to [0, 1) and edge features are
    sender-to-receiver displacements.
    """
    if n < 3:
        raise ValueError("a Delaunay graph needs n >= 3")
    rng = make_rng(rng)
    for _ in range(max_tries):
        ipts = sample_grid_points(n, rng)
        try:
            return delaunay_graph_from_points(ipts)
        except DegenerateInput:
            continue
    raise DegenerateInput(f"only collinear point sets in {max_tries} draws")


def grid_graph(rows: int, cols: int) -> Graph:
    """4-neighbour lattice; positions are (column, row) and edge features
    are displacements in grid units."""
    pairs = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                pairs.append((i, i + 1))
            if r + 1 < rows:
                pairs.append((i, i + cols))
    rr, cc = np.divmod(np.arange(rows * cols), cols)
    pos = np.stack([cc, rr], axis=1).astype(np.float64)
    return _graph(rows * cols, pairs, pos)


GENERATORS = {
    "barabasi-albert": barabasi_albert_tree,
    "random-partition": random_partition_graph,
    "delaunay2d": delaunay2d,
}


def shortest_path_labels(g: Graph, rng=None, max_tries: int = 100) -> LabeledSample:
    """Label every vertex lying on some shortest path between a random pair.

    Two indicator channels (source, target) are appended to the node
    features.  A vertex v is positive iff ``d(s, v) + d(v, t) == d(s, t)``.
    """
    n = g.n_nodes
    if n < 2:
        raise DisconnectedPair("need at least two vertices")
    rng = make_rng(rng)
    adj = neighbors(g)
    for _ in range(max_tries):
        s, t = (int(v) for v in rng.choice(n, size=2, replace=False))
        ds = bfs_distances(adj, s)
        if ds[t] == UNREACHED:
            continue
        dt = bfs_distances(adj, t)
        on_path = (ds != UNREACHED) & (dt != UNREACHED) & (ds + dt == ds[t])
        flags = np.zeros((n, 2))
        flags[s, 0] = 1.0
        flags[t, 1] = 1.0
        graph = g.replace(node_feats=np.concatenate([g.node_feats, flags], axis=1))
        return LabeledSample(graph, on_path.astype(np.int64), "node",
                             {"source": s, "target": t, "distance": int(ds[t])})
    raise DisconnectedPair(f"no connected vertex pair found in {max_tries} draws")


def generate(family: str, n: int, count: int, seed: int, task: str = "shortest-path",
             holes: int = 0, **params):
    """Yield ``count`` labelled samples; sample i uses the i-th spawned seed.

    ``holes`` > 0 cuts that many shortest-path holes into each graph before
    labelling (the obstacle variant of the shortest-path task).
    """
    from .perturb import shortest_path_vertex_dropout
    from .samples import spawn_seeds

    if family not in GENERATORS:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(GENERATORS)}")
    make = GENERATORS[family]
    for i, child in enumerate(spawn_seeds(seed, count)):
        rng = make_rng(child)
        g = make(n, rng=rng, **params)
        if holes:
            g = shortest_path_vertex_dropout(LabeledSample(g), holes, rng).graph
        if task == "shortest-path":
            sample = shortest_path_labels(g, rng)
        elif task == "none":
            sample = LabeledSample(g)
        else:
            raise ValueError(f"unknown task {task!r}")
        sample.meta.update({"generator": family, "index": i})
        yield sample
