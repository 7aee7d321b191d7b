"""Dense symmetric linear algebra for small matrices (n <= 5).

Eigendecompositions use cyclic Jacobi rotations so that every eigenvalue
in the package comes from one deterministic routine.  The rotation loop is
compiled with numba because the LMI search calls it many thousands of times.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import ValidationError

SYMMETRY_RTOL = 1e-12
JACOBI_RTOL = 1e-12
MAX_SWEEPS = 64


class EigenDecomposition(NamedTuple):
    values: np.ndarray   # ascending
    vectors: np.ndarray  # orthonormal columns

    @property
    def min(self) -> float:
        return float(self.values[0])

    @property
    def max(self) -> float:
        return float(self.values[-1])


def as_symmetric(M, name: str = "matrix") -> np.ndarray:
    """Return ``(M + M^T)/2`` after checking that M is square, finite and symmetric."""
    a = np.atleast_2d(np.asarray(M, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise ValidationError(f"{name} is not symmetric (max |M - M^T| = {asym:.3g})")
    return 0.5 * (a + a.T)


@njit(cache=True, nogil=True)
def _jacobi(a, rtol, max_sweeps):
    """Cyclic Jacobi sweeps on a copy-owned symmetric ``a``; returns (diag, V)."""
    n = a.shape[0]
    V = np.eye(n)
    scale = math.sqrt(np.sum(a * a))
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), V
    thresh = rtol * scale
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q and abs(a[p, q]) > off:
                    off = abs(a[p, q])
        if off < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    return np.diag(a).copy(), V


def sym_eig(M) -> EigenDecomposition:
    a = as_symmetric(M).copy()
    values, vectors = _jacobi(np.ascontiguousarray(a, dtype=np.float64), JACOBI_RTOL, MAX_SWEEPS)
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(values[order], vectors[:, order])


def eigvals(M) -> np.ndarray:
    return sym_eig(M).values


def lam_min(M) -> float:
    return sym_eig(M).min


def lam_max(M) -> float:
    return sym_eig(M).max


def is_pos_def(M, tol: float = 0.0) -> bool:
    return lam_min(M) > tol


def assemble_block(M, m) -> np.ndarray:
    """The (n+1)x(n+1) matrix [[M, m], [m^T, 0]]."""
    M = np.asarray(M, dtype=float)
    m = np.asarray(m, dtype=float).reshape(-1)
    n = M.shape[0]
    X = np.zeros((n + 1, n + 1))
    X[:n, :n] = M
    X[:n, n] = m
    X[n, :n] = m
    return X


def block_neg_semidef(M, m, tol: float = 1e-10) -> bool:
    """Decide ``[[M, m], [m^T, 0]] <= 0`` via ``M <= 0 and m = 0``."""
    M = as_symmetric(M, "M")
    m = np.asarray(m, dtype=float).reshape(-1)
    if m.shape[0] != M.shape[0]:
        raise ValidationError(f"dimension mismatch: M is {M.shape[0]}x{M.shape[0]}, m has {m.shape[0]}")
    return lam_max(M) <= tol and float(np.linalg.norm(m)) <= tol


def min_eigenspace(Q, cluster_rtol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the eigenspace belonging to the smallest eigenvalue."""
    dec = sym_eig(Q)
    spread = max(1.0, float(np.max(np.abs(dec.values))))
    mask = dec.values - dec.values[0] <= cluster_rtol * spread
    return dec.vectors[:, mask]


def min_eig_orthogonality(Q, w, tol: float = 1e-8) -> bool:
    """True iff some minimal eigenvector r of Q has ``||w^T r|| <= tol ||r||``.

    A repeated minimal eigenvalue is handled by searching the whole
    eigenspace: the best r minimizes ``||w^T E c||`` over unit c.
    """
    Q = as_symmetric(Q, "Q")
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    if w.shape[0] != Q.shape[0]:
        raise ValidationError(f"w must have {Q.shape[0]} rows, got {w.shape[0]}")
    E = min_eigenspace(Q)
    k = E.shape[1]
    C = w.T @ E
    if k > C.shape[0]:
        return True
    smallest = lam_min(C.T @ C)
    return math.sqrt(max(smallest, 0.0)) <= tol
