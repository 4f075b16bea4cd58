"""IDX file reader and the pixel-grid graph view of MNIST digits."""
from __future__ import annotations

import struct

import numpy as np

from ..exceptions import BadImageShape, BadMagic, CountMismatch, Truncated
from .generators import grid_graph
from .samples import LabeledSample

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
SIDE = 28


def _read_idx(path, magic: int, n_dims: int) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 + 4 * n_dims:
        raise Truncated(f"{path}: header shorter than {4 + 4 * n_dims} bytes")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise BadMagic(f"{path}: magic 0x{got:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{n_dims}I", raw[4:4 + 4 * n_dims])
    size = int(np.prod(dims))
    body = raw[4 + 4 * n_dims:]
    if len(body) < size:
        raise Truncated(f"{path}: expected {size} payload bytes, found {len(body)}")
    return np.frombuffer(body[:size], dtype=np.uint8).reshape(dims)


def load_idx(images_path, labels_path) -> list:
    """Read an IDX image file (magic 0x803) and label file (magic 0x801).

    Returns
    -------
    list of (image uint8 array of shape (rows, cols), int label)
    """
    images = _read_idx(images_path, IMAGE_MAGIC, 3)
    labels = _read_idx(labels_path, LABEL_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return [(images[i], int(labels[i])) for i in range(images.shape[0])]


def write_idx_images(path, images) -> None:
    images = np.asarray(images, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4I", IMAGE_MAGIC, *images.shape))
        fh.write(images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8).reshape(-1)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">2I", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


_GRID = None


def mnist_graph(image, label: int) -> LabeledSample:
    """784-vertex 4-neighbour grid; node feature is intensity / 255."""
    global _GRID
    img = np.asarray(image)
    if img.shape != (SIDE, SIDE):
        raise BadImageShape(f"expected a {SIDE}x{SIDE} image, got {img.shape}")
    if _GRID is None:
        _GRID = grid_graph(SIDE, SIDE)
    g = _GRID.replace(node_feats=(img.astype(np.float64) / 255.0).reshape(-1, 1))
    return LabeledSample(g, int(label), "class")
