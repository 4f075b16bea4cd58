"""Parameters, MLPs, the Adam optimizer and checkpoint files."""
from __future__ import annotations

import json
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .autodiff import Tensor, add, matmul, relu
from .exceptions import ShapeMismatch

CHECKPOINT_MAGIC = b"SGNCKPT1"


class ModelParams(OrderedDict):
    """Ordered mapping of parameter name -> trainable :class:`Tensor`."""

    def new(self, name: str, value) -> Tensor:
        if name in self:
            raise KeyError(f"duplicate parameter name {name!r}")
        t = Tensor(value, requires_grad=True, name=name)
        self[name] = t
        return t

    def zero_grad(self):
        for t in self.values():
            t.grad = None

    def grads(self) -> Dict[str, np.ndarray]:
        return {k: (t.grad if t.grad is not None else np.zeros_like(t.data)) for k, t in self.items()}

    def arrays(self) -> Dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.items()}

    def load_arrays(self, arrays: Dict[str, np.ndarray]):
        missing = set(self) ^ set(arrays)
        if missing:
            raise KeyError(f"parameter names differ: {sorted(missing)}")
        for k, t in self.items():
            value = np.asarray(arrays[k], dtype=np.float64)
            if value.shape != t.shape:
                raise ShapeMismatch(f"{k}: expected {t.shape}, got {value.shape}")
            t.data = value.copy()

    def count(self) -> int:
        return int(sum(t.data.size for t in self.values()))


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / max(fan_in + fan_out, 1))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class MLPParams:
    """Weights and biases of a ReLU MLP with a linear (or ReLU) output layer."""

    weights: List[Tensor]
    biases: List[Tensor]
    activate_final: bool = False

    @classmethod
    def create(cls, store: ModelParams, name: str, sizes, rng, activate_final=False) -> "MLPParams":
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least input and output widths")
        ws, bs = [], []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            ws.append(store.new(f"{name}/w{i}", glorot_uniform(rng, fan_in, fan_out)))
            bs.append(store.new(f"{name}/b{i}", np.zeros((1, fan_out))))
        return cls(ws, bs, activate_final)

    @property
    def in_width(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_width(self) -> int:
        return self.weights[-1].shape[1]

    def __call__(self, X):
        return mlp_apply(self, X)


def mlp_apply(p: MLPParams, X) -> Tensor:
    """Row-wise MLP: ReLU between layers, linear final layer by default."""
    X = X if isinstance(X, Tensor) else Tensor(X)
    if X.shape[1] != p.in_width:
        raise ShapeMismatch(f"MLP expects width {p.in_width}, got {X.shape[1]}")
    return mlp_continue(p, add(matmul(X, p.weights[0]), p.biases[0]))


def mlp_continue(p: MLPParams, pre: Tensor) -> Tensor:
    """Finish an MLP given the pre-activation of its first layer."""
    h = pre
    last = len(p.weights) - 1
    if last > 0 or p.activate_final:
        h = relu(h)
    for i in range(1, last + 1):
        h = add(matmul(h, p.weights[i]), p.biases[i])
        if i < last or p.activate_final:
            h = relu(h)
    return h


def mlp_sizes(d_in: int, hidden: int, n_hidden: int, d_out: int) -> list:
    return [d_in] + [hidden] * n_hidden + [d_out]


# Adam -----------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params, grads) -> AdamState:
    """One bias-corrected Adam update, applied to ``params`` in place.

    ``params`` maps names to tensors (or arrays); ``grads`` maps the same
    names to gradient arrays.
    """
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for name, p in params.items():
        value = p.data if isinstance(p, Tensor) else p
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape:
            raise ShapeMismatch(f"{name}: gradient {g.shape} vs parameter {value.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        value -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state


# checkpoints ----------------------------------------------------------------

def save_checkpoint(path, arrays: Dict[str, np.ndarray], extra: dict = None) -> None:
    """Write ``arrays`` as a JSON header followed by little-endian doubles.

    Layout: 8-byte magic, uint64 (LE) header length, UTF-8 JSON header
    ``{"params": [{"name", "shape"}...], ...extra}``, then the parameters
    flattened in header order as ``<f8``.
    """
    entries = [{"name": k, "shape": list(np.shape(v))} for k, v in arrays.items()]
    header = dict(extra or {})
    header["params"] = entries
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for v in arrays.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns ``(arrays, header)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    (size,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16:16 + size].decode("utf-8"))
    offset = 16 + size
    arrays = OrderedDict()
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(raw):
            raise ValueError(f"{path}: truncated checkpoint")
        arrays[entry["name"]] = np.frombuffer(raw[offset:end], dtype="<f8").reshape(shape).astype(np.float64)
        offset = end
    return arrays, header
