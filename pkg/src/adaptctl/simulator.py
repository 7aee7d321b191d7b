"""Fixed-step closed-loop simulation of the adaptive error system.

State is ``e`` for the static law and ``(e, z)`` for the PI law, where
``z = W_hat - K q`` obeys the LTI form

    dz/dt = -Gamma Sigma z + Gamma (I - Sigma K) q,   q = beta(e) B^T P e.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._csv import csv_text
from .errors import SimulationDiverged, ValidationError
from .lyapunov import NominalCertificate
from .regressors import CallableRegressor, PolynomialRegressor
from .system import LinearErrorSystem, PILaw, StaticLaw

BLOWUP = 1e9
OMEGA_R = 1.7179


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-order-held uniform noise in ``[-cap, cap]`` plus sinusoids ``(amplitude, rad/s, phase)``."""

    seed: int = 0
    sample_dt: float = 0.01
    amplitude_bound: float = 0.01
    sinusoids: tuple = ((0.05, OMEGA_R, 0.0),)

    def __post_init__(self):
        if not self.sample_dt > 0:
            raise ValidationError("noise sample_dt must be positive")
        if self.amplitude_bound < 0:
            raise ValidationError("noise amplitude_bound must be non-negative")
        object.__setattr__(self, "sinusoids", tuple(tuple(map(float, s)) for s in self.sinusoids))

    @classmethod
    def zero(cls) -> "NoiseSpec":
        return cls(seed=0, amplitude_bound=0.0, sinusoids=())

    @property
    def eta_star(self) -> float:
        return self.amplitude_bound + sum(abs(a) for a, _, _ in self.sinusoids)


@dataclass(frozen=True)
class NoiseSignal:
    spec: NoiseSpec
    holds: np.ndarray

    @property
    def sine_arrays(self):
        s = np.array(self.spec.sinusoids, dtype=float).reshape(-1, 3)
        return s[:, 0].copy(), s[:, 1].copy(), s[:, 2].copy()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.minimum((t / self.spec.sample_dt).astype(np.int64), self.holds.size - 1)
        out = self.holds[k].astype(float)
        for a, w, ph in self.spec.sinusoids:
            out = out + a * np.sin(w * t + ph)
        return float(out) if out.ndim == 0 else out


def make_noise(spec: NoiseSpec, t_final: float) -> NoiseSignal:
    """Seeded realization covering ``[0, t_final]``."""
    count = int(math.ceil(t_final / spec.sample_dt)) + 2
    rng = np.random.default_rng(spec.seed)
    holds = rng.uniform(-spec.amplitude_bound, spec.amplitude_bound, size=count)
    holds.setflags(write=False)
    return NoiseSignal(spec, holds)


@dataclass(frozen=True)
class UncertaintyModel:
    beta: PolynomialRegressor | CallableRegressor
    W: np.ndarray
    eta: NoiseSpec = field(default_factory=NoiseSpec.zero)

    def __post_init__(self):
        W = np.atleast_1d(np.asarray(self.W, dtype=float)).reshape(-1)
        if W.shape[0] != self.beta.n_beta:
            raise ValidationError(f"W must have {self.beta.n_beta} entries, got {W.shape[0]}")
        object.__setattr__(self, "W", W)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    e: np.ndarray
    W_hat: np.ndarray
    u: np.ndarray
    q: np.ndarray
    z: Optional[np.ndarray]
    law: str

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def e_norm(self) -> np.ndarray:
        return np.linalg.norm(self.e, axis=1)

    def columns(self):
        n, nb = self.e.shape[1], self.W_hat.shape[1]
        names = ["t"] + [f"e{i + 1}" for i in range(n)] + [f"What{k + 1}" for k in range(nb)]
        names += ["u"] + [f"q{k + 1}" for k in range(nb)]
        blocks = [self.times[:, None], self.e, self.W_hat, self.u[:, None], self.q]
        if self.z is not None:
            names += [f"z{k + 1}" for k in range(nb)]
            blocks.append(self.z)
        return names, np.hstack(blocks)

    def csv_text(self) -> str:
        names, data = self.columns()
        return csv_text(names, data)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.csv_text())


def _law_arrays(law, n_beta: int):
    if law.n_beta != n_beta:
        raise ValidationError(f"update-law gains are {law.n_beta}x{law.n_beta} but beta has {n_beta} entries")
    if isinstance(law, PILaw):
        GS = law.Gamma @ law.Sigma
        Gd = law.Gamma @ (np.eye(n_beta) - law.Sigma @ law.K)
        return True, law.K, GS, Gd
    if isinstance(law, StaticLaw):
        z = np.zeros((n_beta, n_beta))
        return False, law.K, z, z
    raise ValidationError(f"unknown update law {law!r}")


def _python_rk4(sys, v, unc, is_pi, K, GS, Gd, noise, e0, z0, t0, dt, nsteps):
    A, b, W, beta = sys.A, sys.B, unc.W, unc.beta

    def deriv(t, e, z):
        bt = beta(e)
        q = bt * float(v @ e)
        w_hat = K @ q + (z if is_pi else 0.0)
        drive = -float(w_hat @ bt) + float(W @ bt) + noise(t)
        return A @ e + b * drive, (-(GS @ z) + Gd @ q) if is_pi else np.zeros_like(z)

    E = np.empty((nsteps + 1, e0.size))
    Z = np.empty((nsteps + 1, z0.size))
    E[0], Z[0] = e0, z0
    e, z = e0.copy(), z0.copy()
    for step in range(nsteps):
        t = t0 + step * dt
        k1 = deriv(t, e, z)
        k2 = deriv(t + 0.5 * dt, e + 0.5 * dt * k1[0], z + 0.5 * dt * k1[1])
        k3 = deriv(t + 0.5 * dt, e + 0.5 * dt * k2[0], z + 0.5 * dt * k2[1])
        k4 = deriv(t + dt, e + dt * k3[0], z + dt * k3[1])
        e = e + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        z = z + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        E[step + 1], Z[step + 1] = e, z
        if not np.linalg.norm(e) <= BLOWUP:
            return E[: step + 2], Z[: step + 2], step + 1
    return E, Z, -1


def simulate(sys: LinearErrorSystem, cert: NominalCertificate, unc: UncertaintyModel,
             law: StaticLaw | PILaw, e0, z0=None, t_final: float = 50.0, dt: float = 1e-3,
             use_compiled: bool = True) -> Trajectory:
    """Integrate the closed loop with classic RK4 on a uniform grid.

    ``z0`` is the PI internal state ``W_hat(0) - K q(0)``; the default zero
    corresponds to an integral initialized at zero.
    """
    if not dt > 0 or not t_final > 0:
        raise ValidationError("dt and t_final must be positive")
    e0 = np.asarray(e0, dtype=float).reshape(-1)
    if e0.size != sys.n:
        raise ValidationError(f"e0 must have {sys.n} entries")
    if cert.P.shape[0] != sys.n:
        raise ValidationError("certificate dimension does not match the system")
    nb = unc.beta.n_beta
    is_pi, K, GS, Gd = _law_arrays(law, nb)
    z0 = np.zeros(nb) if z0 is None else np.asarray(z0, dtype=float).reshape(-1)
    if z0.size != nb:
        raise ValidationError(f"z0 must have {nb} entries")
    if not is_pi and np.any(z0):
        raise ValidationError("z0 only applies to the PI update law")
    nsteps = int(round(t_final / dt))
    noise = make_noise(unc.eta, nsteps * dt + dt)
    v = sys.B @ cert.P  # = P B for symmetric P
    beta = unc.beta
    if isinstance(beta, PolynomialRegressor) and use_compiled:
        from ._kernel import rk4_closed_loop
        amp, freq, phase = noise.sine_arrays
        E, Z, failed = rk4_closed_loop(
            sys.A, sys.B, v, beta.const, beta.linear, beta.quadratic, unc.W, is_pi,
            K, GS, Gd, np.asarray(noise.holds), unc.eta.sample_dt, amp, freq, phase,
            e0, z0, 0.0, dt, nsteps, BLOWUP)
    else:
        E, Z, failed = _python_rk4(sys, v, unc, is_pi, K, GS, Gd, noise, e0, z0, 0.0, dt, nsteps)
    if failed >= 0:
        raise SimulationDiverged(failed * dt)
    times = np.arange(nsteps + 1) * dt
    betas = beta.batch(E)
    q = betas * (E @ v)[:, None]
    W_hat = q @ K.T + (Z if is_pi else 0.0)
    u = -np.sum(W_hat * betas, axis=1)
    arrays = [times, E, W_hat, u, q] + ([Z] if is_pi else [])
    for a in arrays:
        a.setflags(write=False)
    return Trajectory(times, E, W_hat, u, q, Z if is_pi else None, law.name)


@dataclass(frozen=True)
class UUBReport:
    tail_max: float
    inside: bool
    entry_time: Optional[float]


def verify_uub(traj: Trajectory, r_e: float, tail_fraction: float = 0.25) -> UUBReport:
    """Tail maximum of ||e|| and the time after which ||e|| stays within ``r_e``."""
    if not 0 < tail_fraction <= 1:
        raise ValidationError("tail_fraction must lie in (0, 1]")
    norms = traj.e_norm
    start = int(math.floor((1.0 - tail_fraction) * (norms.size - 1)))
    tail_max = float(norms[start:].max())
    outside = np.nonzero(norms > r_e)[0]
    if outside.size == 0:
        entry = float(traj.times[0])
    elif outside[-1] == norms.size - 1:
        entry = None
    else:
        entry = float(traj.times[outside[-1] + 1])
    return UUBReport(tail_max, tail_max <= r_e, entry)
