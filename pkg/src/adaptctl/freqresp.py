"""Disturbance-observer view of the update laws for beta = 1.

With ``L(W_hat) = R L(e)`` the transfer from the lumped input disturbance
``d = W + eta`` to ``W_hat`` is ``R (sI - A + B R)^-1 B``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ._csv import csv_text
from .errors import ValidationError
from .lyapunov import NominalCertificate
from .system import LinearErrorSystem, PILaw, StaticLaw


@dataclass(frozen=True)
class SensitivitySample:
    omega: float
    value: complex

    @property
    def mag_db(self) -> float:
        return 20.0 * math.log10(abs(self.value)) if self.value != 0 else -math.inf

    @property
    def phase_deg(self) -> float:
        return math.degrees(cmath.phase(self.value))


def _scalar(M, name):
    M = np.atleast_2d(M)
    if M.shape != (1, 1):
        raise ValidationError(f"{name} must be scalar: the frequency analysis is restricted to beta = 1")
    return float(M[0, 0])


def regulator_R(law, cert: NominalCertificate, s: complex) -> np.ndarray:
    """Row vector R(s) with ``L(W_hat) = R(s) L(e)``."""
    row = cert.v.astype(complex)  # B^T P
    if isinstance(law, StaticLaw):
        return _scalar(law.K, "K_P") * row
    if isinstance(law, PILaw):
        K = _scalar(law.K, "K_PI")
        G = _scalar(law.Gamma, "Gamma")
        S = _scalar(law.Sigma, "Sigma")
        den = s + G * S
        if abs(den) <= 1e-12 * max(1.0, G * S):
            raise ValidationError(f"s = {s} is the pole of the PI regulator")
        # (K + Gamma/s) / (1 + Gamma Sigma / s), multiplied through by s
        return (K * s + G) / den * row
    raise ValidationError(f"unknown update law {law!r}")


def sensitivity(law, sys: LinearErrorSystem, cert: NominalCertificate, omega: float) -> SensitivitySample:
    s = 1j * omega
    R = regulator_R(law, cert, s)
    M = s * np.eye(sys.n) - sys.A + np.outer(sys.B, R)
    try:
        x = np.linalg.solve(M, sys.B.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"closed loop singular at omega = {omega:g}") from exc
    return SensitivitySample(float(omega), complex(R @ x))


def bode_table(law, sys: LinearErrorSystem, cert: NominalCertificate, grid) -> list:
    return [sensitivity(law, sys, cert, float(w)) for w in np.asarray(grid, dtype=float).reshape(-1)]


BODE_HEADER = ("omega", "mag_db", "phase_deg", "re", "im")


def bode_csv_text(rows) -> str:
    return csv_text(BODE_HEADER, [(r.omega, r.mag_db, r.phase_deg, r.value.real, r.value.imag) for r in rows])


def write_bode_csv(rows, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(bode_csv_text(rows))
