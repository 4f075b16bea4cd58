"""Laplacian eigendecomposition and the eigenpool/eigenbroadcast projections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import NoConvergence, NotSymmetric, ShapeMismatch
from .graph import Graph, laplacian

DEFAULT_TOL = 1e-10
DEFAULT_MAX_SWEEPS = 100


def _round_robin(n: int) -> list:
    """Rounds of disjoint index pairs covering every pair exactly once.

    Uses the circle method; for odd ``n`` a phantom player sits out.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            p, q = np.array(pairs, dtype=np.int64).T
            rounds.append((p, q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(M, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS):
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once.  Pairs are grouped in
    round-robin order so that the rotations of one round act on disjoint
    rows/columns and are applied together.

    Parameters
    ----------
    M : array_like of shape (n, n)
        Symmetric matrix (checked to 1e-12, relative to its largest entry).
    tol : float
        Stop once the off-diagonal Frobenius norm falls below
        ``tol * ||M||_F``.
    max_sweeps : int

    Returns
    -------
    w : ndarray of shape (n,)
        Eigenvalues in ascending order, ties kept in solver order.
    V : ndarray of shape (n, n)
        Orthonormal eigenvectors as columns, ``M @ V ~= V * w``.
    """
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {A.shape}")
    w, V = jacobi_eigh_stack(A[None], tol, max_sweeps)
    return w[0], V[0]


def jacobi_eigh_stack(Ms, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS):
    """:func:`jacobi_eigh` over a stack of same-size matrices, shape (B, n, n).

    Matrices are rotated together but each stops on its own convergence
    test, so every result equals the one obtained by solving it alone.
    """
    A = np.array(Ms, dtype=np.float64, copy=True)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise NotSymmetric(f"expected a stack of square matrices, got shape {A.shape}")
    B, n = A.shape[0], A.shape[1]
    for i in range(B):
        scale = np.abs(A[i]).max() if n else 0.0
        if n and np.abs(A[i] - A[i].T).max() > 1e-12 * max(scale, 1.0):
            raise NotSymmetric("matrix is not symmetric within 1e-12")
    A = 0.5 * (A + A.transpose(0, 2, 1))
    Vt = np.broadcast_to(np.eye(n), A.shape).copy()
    threshold = tol * np.sqrt(np.sum(A * A, axis=(1, 2)))
    rounds = _round_robin(n)
    diag = np.arange(n)

    live = np.arange(B)
    sweeps = 0
    while True:
        off = A[live].copy()
        off[:, diag, diag] = 0.0
        live = live[np.sqrt(np.sum(off * off, axis=(1, 2))) > threshold[live]]
        if live.size == 0:
            break
        if sweeps >= max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        sweeps += 1
        S, V = A[live], Vt[live]
        for p, q in rounds:
            apq = S[:, p, q]
            zero = apq == 0.0
            theta = (S[:, q, q] - S[:, p, p]) / (2.0 * np.where(zero, 1.0, apq))
            big = np.abs(theta) > 1e150
            safe = np.where(big, 1.0, theta)
            t = np.sign(safe) / (np.abs(safe) + np.sqrt(safe * safe + 1.0))
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0.0] = 1.0
            t[zero] = 0.0
            c = (1.0 / np.sqrt(t * t + 1.0))[:, :, None]
            s = t[:, :, None] * c

            # rows of J^T A, then rows of J^T (J^T A)^T = J^T A J (A symmetric)
            for _ in range(2):
                Ap, Aq = S[:, p], S[:, q]
                S[:, p], S[:, q] = c * Ap - s * Aq, s * Ap + c * Aq
                S = np.ascontiguousarray(S.transpose(0, 2, 1))
            S[:, p, q] = 0.0
            S[:, q, p] = 0.0
            Vp, Vq = V[:, p], V[:, q]
            V[:, p], V[:, q] = c * Vp - s * Vq, s * Vp + c * Vq
        A[live], Vt[live] = S, V

    w = np.diagonal(A, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(Vt.transpose(0, 2, 1), order[:, None, :], axis=2).copy()
    return w, V


def fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    Near-ties (within 1e-9 relative) go to the lowest vertex index, which
    keeps the rule stable under rounding noise.  The rule is idempotent.
    """
    U = np.array(U, dtype=np.float64, copy=True)
    for j in range(U.shape[1]):
        col = np.abs(U[:, j])
        top = col.max() if col.size else 0.0
        if top == 0.0:
            continue
        i = int(np.flatnonzero(col >= top * (1.0 - 1e-9))[0])
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
    return U


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """The K smallest Laplacian eigenpairs of one graph.

    Columns past ``active`` are zero padding used when ``K > |V|``.
    """

    eigvals: np.ndarray
    eigvecs: np.ndarray
    active: int

    @property
    def k(self) -> int:
        return self.eigvals.shape[0]

    @property
    def projection(self) -> np.ndarray:
        return self.eigvecs


@dataclass(frozen=True, eq=False)
class ThresholdedBasis:
    """``concat[max(U, 0), max(-U, 0)]`` with eigenvalues duplicated."""

    eigvals: np.ndarray
    matrix: np.ndarray
    active: int

    @property
    def k(self) -> int:
        return self.eigvals.shape[0] // 2

    @property
    def projection(self) -> np.ndarray:
        return self.matrix


def eigh(M, method: str = "jacobi", tol: float = DEFAULT_TOL):
    if method == "jacobi":
        return jacobi_eigh(M, tol=tol)
    if method == "lapack":
        return np.linalg.eigh(np.asarray(M, dtype=np.float64))
    raise ValueError(f"unknown eigensolver {method!r}")


def spectral_basis(g: Graph, k: int, method: str = "jacobi") -> SpectralBasis:
    """K smallest eigenpairs of ``laplacian(g)``, sign-fixed and zero-padded."""
    if k < 1:
        raise ValueError("K must be >= 1")
    L = laplacian(g)
    if L.shape[0]:
        return basis_from_eigh(*eigh(L, method=method), k)
    return basis_from_eigh(np.zeros(0), np.zeros((0, 0)), k)


def spectral_bases(graphs, k: int, method: str = "jacobi", chunk: int = 64) -> list:
    """:func:`spectral_basis` for many graphs.

    With the Jacobi solver, graphs of equal size are solved together in
    stacks of ``chunk``; results equal the one-at-a-time ones.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    graphs = list(graphs)
    if method != "jacobi":
        return [spectral_basis(g, k, method) for g in graphs]
    out = [None] * len(graphs)
    by_size = {}
    for i, g in enumerate(graphs):
        by_size.setdefault(g.n_nodes, []).append(i)
    for n, idx in by_size.items():
        for lo in range(0, len(idx), chunk):
            part = idx[lo:lo + chunk]
            if n == 0:
                for i in part:
                    out[i] = spectral_basis(graphs[i], k, method)
                continue
            w, V = jacobi_eigh_stack(np.stack([laplacian(graphs[i]) for i in part]))
            for j, i in enumerate(part):
                out[i] = basis_from_eigh(w[j], V[j], k)
    return out


def basis_from_eigh(w, V, k: int) -> SpectralBasis:
    """Keep the K smallest pairs of an ascending decomposition, sign-fixed.

    Round-off negatives are clamped to 0; columns past ``n`` are zero.
    """
    n = V.shape[0]
    w = np.where(w < 0.0, 0.0, w)
    active = min(k, n)
    vals = np.zeros(k)
    vecs = np.zeros((n, k))
    vals[:active] = w[:active]
    vecs[:, :active] = fix_signs(V[:, :active])
    return SpectralBasis(vals, vecs, active)


def threshold_basis(b: SpectralBasis) -> ThresholdedBasis:
    U = b.eigvecs
    matrix = np.concatenate([np.maximum(U, 0.0), np.maximum(-U, 0.0)], axis=1)
    return ThresholdedBasis(np.concatenate([b.eigvals, b.eigvals]), matrix, b.active)


def _project(P, X, transpose: bool):
    from .autodiff import Tensor, const_matmul

    if not sp.issparse(P):
        P = np.asarray(P, dtype=np.float64)
    rows = X.shape[0]
    expected = P.shape[0] if transpose else P.shape[1]
    if P.ndim != 2 or rows != expected:
        op = "eigenpool" if transpose else "eigenbroadcast"
        raise ShapeMismatch(f"{op}: projection {P.shape} incompatible with features of {rows} rows")
    C = P.T if transpose else P
    if sp.issparse(C):
        C = C.tocsr()
    if isinstance(X, Tensor):
        return const_matmul(C, X)
    return C @ np.asarray(X, dtype=np.float64)


def eigenpool(P, Vg):
    """Project spatial node features onto spectral vertices: ``P.T @ Vg``."""
    return _project(P, Vg, transpose=True)


def eigenbroadcast(P, Vs):
    """Send spectral vertex features back to spatial nodes: ``P @ Vs``."""
    return _project(P, Vs, transpose=False)
