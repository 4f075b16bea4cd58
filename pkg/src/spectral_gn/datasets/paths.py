"""Breadth-first search utilities on unweighted graphs."""
from __future__ import annotations

from collections import deque

import numpy as np

from ..graph import Graph, neighbors

UNREACHED = -1


def bfs_distances(adj, source: int) -> np.ndarray:
    """Hop distances from ``source``; unreachable vertices get -1."""
    dist = np.full(len(adj), UNREACHED, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in adj[u]:
            if dist[v] == UNREACHED:
                dist[v] = du
                queue.append(v)
    return dist


def bfs_path(adj, source: int, target: int):
    """One shortest path as a vertex list, or ``None`` if unreachable.

    Neighbours are expanded in ascending index order, so the path is the
    one through the earliest-discovered parents.
    """
    parent = {source: source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if u == target:
            break
        for v in sorted(adj[u]):
            if v not in parent:
                parent[v] = u
                queue.append(v)
    if target not in parent:
        return None
    path = [target]
    while path[-1] != source:
        path.append(parent[path[-1]])
    return path[::-1]


def diameter(g: Graph) -> float:
    """Longest shortest-path distance; ``inf`` if the graph is disconnected."""
    if g.n_nodes == 0:
        return 0.0
    adj = neighbors(g)
    best = 0
    for s in range(g.n_nodes):
        d = bfs_distances(adj, s)
        if np.any(d == UNREACHED):
            return float("inf")
        best = max(best, int(d.max()))
    return float(best)


def n_components(g: Graph) -> int:
    adj = neighbors(g)
    seen = np.zeros(g.n_nodes, dtype=bool)
    count = 0
    for s in range(g.n_nodes):
        if not seen[s]:
            count += 1
            seen[bfs_distances(adj, s) != UNREACHED] = True
    return count


def is_connected(g: Graph) -> bool:
    return g.n_nodes > 0 and n_components(g) == 1
