"""Regressor families beta(e) for the structured uncertainty W^T beta(e).

Polynomial regressors (degree <= 2) are the certified family: their lower
bound and growth function are available in closed form.  Arbitrary callables
can still be simulated but are rejected by the bound computations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class PolynomialRegressor:
    """``beta_i(e) = const_i + linear_i . e + e^T quadratic_i e``."""

    const: np.ndarray
    linear: np.ndarray
    quadratic: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.const, dtype=float).reshape(-1)
        L = np.asarray(self.linear, dtype=float)
        H = np.asarray(self.quadratic, dtype=float)
        if L.ndim != 2 or L.shape[0] != c.shape[0]:
            raise ValidationError(f"linear part must be {c.shape[0]} x n, got {L.shape}")
        n = L.shape[1]
        if H.shape != (c.shape[0], n, n):
            raise ValidationError(f"quadratic part must be {(c.shape[0], n, n)}, got {H.shape}")
        H = 0.5 * (H + np.transpose(H, (0, 2, 1)))
        object.__setattr__(self, "const", c)
        object.__setattr__(self, "linear", L)
        object.__setattr__(self, "quadratic", H)

    @classmethod
    def constant(cls, const, n: int) -> "PolynomialRegressor":
        c = np.atleast_1d(np.asarray(const, dtype=float))
        return cls(c, np.zeros((c.size, n)), np.zeros((c.size, n, n)))

    @classmethod
    def affine(cls, const, linear) -> "PolynomialRegressor":
        L = np.atleast_2d(np.asarray(linear, dtype=float))
        c = np.asarray(const, dtype=float).reshape(-1)
        return cls(c, L, np.zeros((L.shape[0], L.shape[1], L.shape[1])))

    @property
    def n(self) -> int:
        return self.linear.shape[1]

    @property
    def n_beta(self) -> int:
        return self.const.shape[0]

    @property
    def family(self) -> str:
        if np.any(self.quadratic):
            return "polynomial"
        if np.any(self.linear):
            return "affine"
        return "constant"

    def __call__(self, e) -> np.ndarray:
        e = np.asarray(e, dtype=float)
        return self.const + self.linear @ e + np.einsum("kij,i,j->k", self.quadratic, e, e)

    def batch(self, E) -> np.ndarray:
        """Evaluate on rows of ``E`` (N x n); returns N x n_beta."""
        E = np.asarray(E, dtype=float)
        return (self.const[None, :] + E @ self.linear.T
                + np.einsum("kij,ti,tj->tk", self.quadratic, E, E))

    def alpha_beta(self, r: float) -> float:
        """Non-decreasing bound ``||beta(x)|| <= alpha_beta(||x||)``."""
        hq = np.sqrt(sum(np.linalg.norm(Hk, 2) ** 2 for Hk in self.quadratic))
        return float(np.linalg.norm(self.const) + np.linalg.norm(self.linear, 2) * r + hq * r * r)


@dataclass(frozen=True)
class CallableRegressor:
    """Uncertified regressor: simulation only."""

    fn: Callable
    n_beta: int
    family: str = "callable"

    def __call__(self, e) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(e, dtype=float)), dtype=float).reshape(self.n_beta)

    def batch(self, E) -> np.ndarray:
        return np.array([self(e) for e in np.asarray(E, dtype=float)]).reshape(-1, self.n_beta)


Regressor = PolynomialRegressor | CallableRegressor
