"""Error-system and update-law value types."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .linalg import as_symmetric, lam_max, lam_min


def _as_gain(M, name: str) -> np.ndarray:
    return as_symmetric(np.atleast_2d(np.asarray(M, dtype=float)), name)


@dataclass(frozen=True)
class LinearErrorSystem:
    """Single-input error dynamics ``de/dt = A e + B (u + W^T beta(e) + eta)``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(-1)
        if A.shape[0] != A.shape[1]:
            raise ValidationError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ValidationError(f"B must have {A.shape[0]} entries, got {B.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValidationError("A and B must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def second_order(cls, omega0: float, zeta: float) -> "LinearErrorSystem":
        """Companion form of a mass-like plant with natural frequency omega0 and damping zeta."""
        if omega0 <= 0:
            raise ValidationError("omega0 must be positive")
        A = np.array([[0.0, 1.0], [-omega0 ** 2, -2.0 * zeta * omega0]])
        B = np.array([0.0, omega0 ** -2])
        return cls(A, B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @cached_property
    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    @property
    def hurwitz(self) -> bool:
        return bool(np.all(self.poles.real < 0))

    @property
    def controllable(self) -> bool:
        cols = [self.B]
        for _ in range(self.n - 1):
            cols.append(self.A @ cols[-1])
        return int(np.linalg.matrix_rank(np.column_stack(cols))) == self.n


@dataclass(frozen=True)
class StaticLaw:
    """Memoryless update ``W_hat = K beta(e) B^T P e``."""

    K: np.ndarray

    def __post_init__(self):
        K = _as_gain(self.K, "K_P")
        if lam_min(K) <= 0:
            raise ValidationError("static law gain K_P must be positive definite")
        object.__setattr__(self, "K", K)

    @classmethod
    def scaled(cls, alpha: float, K_b) -> "StaticLaw":
        if alpha <= 0:
            raise ValidationError("alpha must be positive")
        return cls(alpha * _as_gain(K_b, "K_b"))

    @property
    def n_beta(self) -> int:
        return self.K.shape[0]

    @property
    def name(self) -> str:
        return "static"


@dataclass(frozen=True)
class PILaw:
    """Feedthrough plus sigma-modified integral update.

    ``W_hat = K q + Gamma * integral(q - Sigma W_hat)`` with ``q = beta B^T P e``.
    """

    K: np.ndarray
    Gamma: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        K = _as_gain(self.K, "K_PI")
        G = _as_gain(self.Gamma, "Gamma")
        S = _as_gain(self.Sigma, "Sigma")
        if not (K.shape == G.shape == S.shape):
            raise ValidationError("K_PI, Gamma and Sigma must share one dimension")
        if lam_min(G) <= 0 or lam_min(S) <= 0:
            raise ValidationError("Gamma and Sigma must be positive definite (0 < Gamma, Sigma is required)")
        if lam_min(K) < -1e-12 * max(1.0, lam_max(np.abs(K))):
            raise ValidationError("K_PI must be positive semidefinite (0 <= K is required)")
        if lam_min(4.0 * np.linalg.inv(S) - K) <= 0:
            raise ValidationError("K_PI must satisfy K < 4 Sigma^-1")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "Sigma", S)

    @property
    def n_beta(self) -> int:
        return self.K.shape[0]

    @property
    def name(self) -> str:
        return "pi"


UpdateLaw = StaticLaw | PILaw
