"""A small reverse-mode autodiff engine over rank-2 float64 arrays.

Every op returns a new :class:`Tensor` that remembers its parents and a
closure pushing the output gradient back to them.  ``Tensor.backward``
walks the graph in reverse topological order.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .exceptions import SegmentIdOutOfRange, ShapeMismatch


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeMismatch(f"tensors are rank 2, got shape {arr.shape}")
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        # never mutate the first contribution in place: it may alias another array
        if self.grad is None:
            self.grad = g
        else:
            self.grad = self.grad + g

    def backward(self, grad=None):
        """Backpropagate from this tensor (a 1x1 loss unless ``grad`` is given)."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self._accumulate(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                if node._parents:
                    # intermediate gradients are not needed after propagation
                    node.grad = None

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward) -> Tensor:
    out = Tensor(data)
    live = tuple(p for p in parents if p.requires_grad)
    if live:
        out.requires_grad = True
        out._parents = live
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] != 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        g = g.sum(axis=1, keepdims=True)
    return g


def _check_broadcast(a, b, op):
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeMismatch(f"{op}: cannot broadcast {a.shape} with {b.shape}")


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(-_unbroadcast(g, b.shape))

    return _make(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    """Elementwise product with row/column broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    return _make(a.data * c, (a,), lambda g: a._accumulate(g * c))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _make(a.data @ b.data, (a, b), backward)


def const_matmul(C, x: Tensor) -> Tensor:
    """``C @ x`` for a constant dense or scipy-sparse matrix ``C``."""
    x = as_tensor(x)
    if C.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"const_matmul: {C.shape} @ {x.shape}")
    out = C @ x.data
    return _make(np.asarray(out), (x,), lambda g: x._accumulate(np.asarray(C.T @ g)))


def transpose(a: Tensor) -> Tensor:
    return _make(a.data.T.copy(), (a,), lambda g: a._accumulate(g.T))


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: a._accumulate(g.reshape(old)))


def slice_rows(a: Tensor, lo: int, hi: int) -> Tensor:
    """Rows ``lo:hi`` of ``a``."""
    def backward(g):
        full = np.zeros_like(a.data)
        full[lo:hi] = g
        a._accumulate(full)

    return _make(a.data[lo:hi], (a,), backward)


def concat_cols(xs) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    rows = {x.shape[0] for x in xs}
    if len(rows) != 1:
        raise ShapeMismatch(f"concat_cols: row counts differ {sorted(rows)}")
    bounds = np.cumsum([0] + [x.shape[1] for x in xs])

    def backward(g):
        for x, lo, hi in zip(xs, bounds[:-1], bounds[1:]):
            if x.requires_grad:
                x._accumulate(g[:, lo:hi])

    return _make(np.concatenate([x.data for x in xs], axis=1), xs, backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _make(np.where(mask, a.data, 0.0), (a,), lambda g: a._accumulate(g * mask))


def sigmoid(a: Tensor) -> Tensor:
    out = _stable_sigmoid(a.data)
    return _make(out, (a,), lambda g: a._accumulate(g * out * (1.0 - out)))


def _stable_sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def row_sum(a: Tensor) -> Tensor:
    """Sum over rows, giving a (1, d) tensor."""
    return _make(a.data.sum(axis=0, keepdims=True), (a,),
                 lambda g: a._accumulate(np.broadcast_to(g, a.shape)))


def row_mean(a: Tensor) -> Tensor:
    n = a.shape[0]
    if n == 0:
        return _make(np.zeros((1, a.shape[1])), (a,), lambda g: None)
    return _make(a.data.mean(axis=0, keepdims=True), (a,),
                 lambda g: a._accumulate(np.broadcast_to(g / n, a.shape)))


def total(a: Tensor) -> Tensor:
    return _make(a.data.sum().reshape(1, 1), (a,),
                 lambda g: a._accumulate(np.broadcast_to(g, a.shape)))


def segment_matrix(ids, n_segments: int):
    """Sparse (n_segments, len(ids)) indicator matrix."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= n_segments):
        raise SegmentIdOutOfRange(f"segment ids must lie in [0, {n_segments})")
    return sp.csr_matrix((np.ones(ids.size), (ids, np.arange(ids.size))),
                         shape=(n_segments, ids.size))


def segment_sum(a: Tensor, ids, n_segments: int) -> Tensor:
    """Sum rows of ``a`` into ``n_segments`` buckets given by ``ids``."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.shape[0] != a.shape[0]:
        raise ShapeMismatch(f"segment_sum: {ids.shape[0]} ids for {a.shape[0]} rows")
    S = segment_matrix(ids, n_segments)
    return _make(np.asarray(S @ a.data), (a,), lambda g: a._accumulate(g[ids]))


def segment_mean(a: Tensor, ids, n_segments: int) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    counts = np.bincount(ids, minlength=n_segments).astype(np.float64)
    inv = np.where(counts > 0, 1.0 / np.maximum(counts, 1.0), 0.0)[:, None]
    return mul(segment_sum(a, ids, n_segments), Tensor(inv))


def gather_rows(a: Tensor, idx) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise SegmentIdOutOfRange(f"row index out of range [0, {a.shape[0]})")
    n = a.shape[0]

    def backward(g):
        a._accumulate(np.asarray(segment_matrix(idx, n) @ g))

    return _make(a.data[idx], (a,), backward)


# losses ---------------------------------------------------------------------

def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean cross-entropy of integer ``labels`` under softmax(``logits``)."""
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    n, c = logits.shape
    if labels.shape[0] != n:
        raise ShapeMismatch(f"{labels.shape[0]} labels for {n} rows of logits")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise SegmentIdOutOfRange(f"class labels must lie in [0, {c})")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsum
    loss = -logp[np.arange(n), labels].mean()

    def backward(g):
        p = np.exp(logp)
        p[np.arange(n), labels] -= 1.0
        logits._accumulate(g * p / n)

    return _make(np.array([[loss]]), (logits,), backward)


def bce_with_logits(logits: Tensor, targets, pos_weight: float = 1.0) -> Tensor:
    """Mean binary cross-entropy on logits; positives weighted by ``pos_weight``."""
    y = np.asarray(targets, dtype=np.float64).reshape(logits.shape)
    x = logits.data
    # log(1 + exp(-x)) computed stably
    softplus_neg = np.logaddexp(0.0, -x)
    per = pos_weight * y * softplus_neg + (1.0 - y) * (x + softplus_neg)
    n = max(x.size, 1)
    p = _stable_sigmoid(x)

    def backward(g):
        grad = (1.0 - y) * p - pos_weight * y * (1.0 - p)
        logits._accumulate(g * grad / n)

    return _make(np.array([[per.sum() / n]]), (logits,), backward)


def mse(pred: Tensor, target) -> Tensor:
    t = np.asarray(target, dtype=np.float64).reshape(pred.shape)
    diff = pred.data - t
    n = max(diff.size, 1)
    return _make(np.array([[np.sum(diff * diff) / n]]), (pred,),
                 lambda g: pred._accumulate(g * 2.0 * diff / n))


def mae(pred: Tensor, target) -> Tensor:
    t = np.asarray(target, dtype=np.float64).reshape(pred.shape)
    diff = pred.data - t
    n = max(diff.size, 1)
    return _make(np.array([[np.abs(diff).sum() / n]]), (pred,),
                 lambda g: pred._accumulate(g * np.sign(diff) / n))
