"""Lyapunov equation and the eigenvalue-lift function

    g(phi, Q, v) = lambda_min(Q + phi v v^T).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NotHurwitzError, NumericalError, ValidationError
from .linalg import as_symmetric, lam_max, lam_min, sym_eig

# Tolerances used throughout this module.
EIG_TOL = 1e-10
LYAP_RESIDUAL_TOL = 1e-9
FLAT_TOL = 1e-9
EIGENGAP_TOL = 1e-8


def check_hurwitz(A) -> None:
    eig = np.linalg.eigvals(np.atleast_2d(A))
    worst = eig[np.argmax(eig.real)]
    if worst.real >= 0:
        raise NotHurwitzError(worst.real if abs(worst.imag) == 0 else worst)


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve ``A^T P + P A = -Q`` by vectorization."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = as_symmetric(Q, "Q")
    n = A.shape[0]
    if A.shape != (n, n) or Q.shape != (n, n):
        raise ValidationError(f"A {A.shape} and Q {Q.shape} must be square of equal size")
    check_hurwitz(A)
    I = np.eye(n)
    L = np.kron(A.T, I) + np.kron(I, A.T)
    P = np.linalg.solve(L, -Q.reshape(-1)).reshape(n, n)
    P = 0.5 * (P + P.T)
    res = np.max(np.abs(A.T @ P + P @ A + Q))
    if res > LYAP_RESIDUAL_TOL * max(1.0, np.max(np.abs(Q))):
        raise NumericalError(f"Lyapunov residual {res:.3g} exceeds tolerance")
    return P


def lyapunov_Q(A, P) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    P = np.asarray(P, dtype=float)
    Q = -(A.T @ P + P @ A)
    return 0.5 * (Q + Q.T)


@dataclass(frozen=True)
class NominalCertificate:
    """``P, Q > 0`` with ``Q = -(A^T P + P A)`` and ``v = P B``."""

    P: np.ndarray
    Q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        P = as_symmetric(self.P, "P")
        Q = as_symmetric(self.Q, "Q")
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if lam_min(P) <= 0:
            raise ValidationError("P must be positive definite")
        if lam_min(Q) <= 0:
            raise ValidationError("Q must be positive definite")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_P(cls, A, B, P) -> "NominalCertificate":
        P = as_symmetric(P, "P")
        return cls(P, lyapunov_Q(A, P), P @ np.asarray(B, dtype=float).reshape(-1))

    @classmethod
    def from_Q(cls, A, B, Q) -> "NominalCertificate":
        P = solve_lyapunov(A, Q)
        return cls(P, as_symmetric(Q), P @ np.asarray(B, dtype=float).reshape(-1))

    def residual(self, A) -> float:
        return float(np.max(np.abs(lyapunov_Q(A, self.P) - self.Q)))

    @property
    def lam_min_P(self) -> float:
        return lam_min(self.P)

    @property
    def lam_max_P(self) -> float:
        return lam_max(self.P)

    @property
    def lam_min_Q(self) -> float:
        return lam_min(self.Q)

    @property
    def lam_max_Q(self) -> float:
        return lam_max(self.Q)


def _column(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def g_eval(phi: float, Q, v) -> float:
    """``lambda_min(Q + phi v v^T)``; ``phi`` may be negative."""
    v = _column(v)
    return lam_min(np.asarray(Q, dtype=float) + phi * (v @ v.T))


class GDerivative(NamedTuple):
    value: float
    eigengap: float
    finite_difference: bool


def g_derivative(phi: float, Q, v) -> GDerivative:
    """d/dphi of g: ``||v^T w||^2`` for the unit minimal eigenvector w.

    When the two smallest eigenvalues are closer than 1e-8 the eigenvector is
    ill-defined and a central difference is returned instead.
    """
    v = _column(v)
    Q = np.asarray(Q, dtype=float)
    dec = sym_eig(Q + phi * (v @ v.T))
    gap = float(dec.values[1] - dec.values[0]) if len(dec.values) > 1 else math.inf
    if gap > EIGENGAP_TOL:
        w = dec.vectors[:, 0]
        return GDerivative(float(np.sum((v.T @ w) ** 2)), gap, False)
    h = 1e-6 * max(1.0, abs(phi))
    fd = (g_eval(phi + h, Q, v) - g_eval(phi - h, Q, v)) / (2.0 * h)
    return GDerivative(fd, gap, True)


class PhiStar(NamedTuple):
    phi_star: float
    lifted: bool


def check_eigenvalue_lift(Q, v) -> bool:
    """Whether ``g(1, Q, v) > lambda_min(Q)``, i.e. whether the lift can raise the decay rate at all."""
    return g_eval(1.0, Q, v) > lam_min(Q) + EIG_TOL


def g_phi_star(Q, v, grid_max: float = 1e6, tol: float = FLAT_TOL) -> PhiStar:
    """Smallest phi at which g reaches its supremum (inf if still rising at ``grid_max``).

    g is strictly increasing up to phi* and constant afterwards, so we double
    phi until g stalls and then bisect for the start of the plateau.
    """
    Q = as_symmetric(Q, "Q")
    vc = _column(v)
    n, m = vc.shape
    if n <= m:
        raise ValidationError("g_phi_star needs v with fewer columns than rows (m < n)")
    if not np.any(vc):
        raise ValidationError("v = 0: g is constant and phi* is meaningless")
    if not check_eigenvalue_lift(Q, vc):
        return PhiStar(0.0, False)
    phi = 1.0
    g_lo = g_eval(phi, Q, vc)
    while True:
        if 2.0 * phi > grid_max:
            return PhiStar(math.inf, True)
        g_hi = g_eval(2.0 * phi, Q, vc)
        if g_hi - g_lo < tol:
            break
        phi, g_lo = 2.0 * phi, g_hi
    hi = 2.0 * phi
    top = g_hi
    lo = 0.0
    # invariant: g(lo) < top - tol <= g(hi)
    while hi - lo > 1e-10 * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if g_eval(mid, Q, vc) >= top - tol:
            hi = mid
        else:
            lo = mid
    return PhiStar(hi, True)


@dataclass(frozen=True)
class GProfile:
    samples: list
    phi_star: float


def g_profile(Q, v, phis) -> GProfile:
    samples = [(float(p), g_eval(float(p), Q, v)) for p in phis]
    try:
        star = g_phi_star(Q, v).phi_star
    except ValidationError:
        star = math.nan
    return GProfile(samples, star)
