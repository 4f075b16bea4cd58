"""Spectral GraphNets: spatial message passing coupled to a spectral graph.

The spectral graph of an input graph is a complete graph on the K
smallest-eigenvalue Laplacian eigenvectors.  Each message-passing step runs
a GNN on both graphs and exchanges node latents through the eigenvector
matrix (``P.T @ V`` into the spectral graph, ``P @ V`` back out).
"""
from .estimator import (SpectralFeaturizer, SpectralGNClassifier, SpectralGNNodeClassifier,
                        SpectralGNRegressor, load_estimator)
from .exceptions import SpectralGNError
from .graph import BatchedGraph, Graph, disjoint_union, laplacian, unbatch
from .harness import ExperimentConfig, RunRecord, evaluate, train
from .model import GraphNetBaseline, SpectralGN, SpectralGNConfig, make_batch, spectral_input
from .spectral import eigenbroadcast, eigenpool, jacobi_eigh, spectral_basis, threshold_basis

__version__ = "0.1.0"

__all__ = [
    "BatchedGraph", "ExperimentConfig", "Graph", "GraphNetBaseline", "RunRecord", "SpectralFeaturizer",
    "SpectralGN", "SpectralGNClassifier", "SpectralGNConfig", "SpectralGNError", "SpectralGNNodeClassifier",
    "SpectralGNRegressor", "disjoint_union", "eigenbroadcast", "eigenpool", "evaluate", "jacobi_eigh",
    "laplacian", "load_estimator", "make_batch", "spectral_basis", "spectral_input", "threshold_basis",
    "train", "unbatch",
]
