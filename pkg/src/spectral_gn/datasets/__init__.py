"""Dataset generators, loaders and perturbations."""
from .delaunay import incircle, orient, triangle_edges, triangulate
from .generators import (GENERATORS, barabasi_albert_tree, delaunay2d, generate, grid_graph,
                         random_partition_graph, shortest_path_labels, uniform_random_tree)
from .mnist import load_idx, mnist_graph, write_idx_images, write_idx_labels
from .paths import bfs_distances, bfs_path, diameter, is_connected, n_components
from .perturb import (PERTURBATIONS, edge_dropout, edge_dropout_sample, perturb,
                      shortest_path_vertex_dropout, uniform_vertex_dropout)
from .samples import LabeledSample, load_manifest, load_samples, make_rng, save_samples, spawn_seeds

__all__ = [
    "GENERATORS", "LabeledSample", "PERTURBATIONS", "barabasi_albert_tree", "bfs_distances", "bfs_path",
    "delaunay2d", "diameter", "edge_dropout", "edge_dropout_sample", "generate", "grid_graph", "incircle",
    "is_connected", "load_idx", "load_manifest", "load_samples", "make_rng", "mnist_graph", "n_components",
    "orient", "perturb", "random_partition_graph", "save_samples", "shortest_path_labels",
    "shortest_path_vertex_dropout", "spawn_seeds", "triangle_edges", "triangulate", "uniform_random_tree",
    "uniform_vertex_dropout", "write_idx_images", "write_idx_labels",
]
