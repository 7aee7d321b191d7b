"""Compiled fixed-step RK4 for the closed loop with a polynomial regressor."""
import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _eta(t, holds, hold_dt, amp, freq, phase):
    k = int(t / hold_dt)
    if k >= holds.shape[0]:
        k = holds.shape[0] - 1
    out = holds[k]
    for i in range(amp.shape[0]):
        out += amp[i] * math.sin(freq[i] * t + phase[i])
    return out


@njit(cache=True, nogil=True)
def _deriv(t, e, z, A, b, v, c, L, H, W, is_pi, K, GS, Gd,
           holds, hold_dt, amp, freq, phase, de, dz):
    n = e.shape[0]
    nb = c.shape[0]
    beta = np.empty(nb)
    for k in range(nb):
        s = c[k]
        for i in range(n):
            s += L[k, i] * e[i]
            for j in range(n):
                s += H[k, i, j] * e[i] * e[j]
        beta[k] = s
    y = 0.0
    for i in range(n):
        y += v[i] * e[i]
    q = beta * y
    w_hat = K @ q
    if is_pi:
        w_hat = w_hat + z
    u = 0.0
    struct = 0.0
    for k in range(nb):
        u -= w_hat[k] * beta[k]
        struct += W[k] * beta[k]
    drive = u + struct + _eta(t, holds, hold_dt, amp, freq, phase)
    for i in range(n):
        s = b[i] * drive
        for j in range(n):
            s += A[i, j] * e[j]
        de[i] = s
    if is_pi:
        tmp = -(GS @ z) + Gd @ q
        for k in range(nb):
            dz[k] = tmp[k]
    else:
        for k in range(nb):
            dz[k] = 0.0


@njit(cache=True, nogil=True)
def rk4_closed_loop(A, b, v, c, L, H, W, is_pi, K, GS, Gd,
                    holds, hold_dt, amp, freq, phase,
                    e0, z0, t0, dt, nsteps, blowup):
    """Integrate the state (e, z); returns (E, Z, failed_step or -1)."""
    n = e0.shape[0]
    nb = z0.shape[0]
    E = np.empty((nsteps + 1, n))
    Z = np.empty((nsteps + 1, nb))
    E[0] = e0
    Z[0] = z0
    k1e = np.empty(n); k2e = np.empty(n); k3e = np.empty(n); k4e = np.empty(n)
    k1z = np.empty(nb); k2z = np.empty(nb); k3z = np.empty(nb); k4z = np.empty(nb)
    e = e0.copy()
    z = z0.copy()
    for step in range(nsteps):
        t = t0 + step * dt
        _deriv(t, e, z, A, b, v, c, L, H, W, is_pi, K, GS, Gd, holds, hold_dt, amp, freq, phase, k1e, k1z)
        _deriv(t + 0.5 * dt, e + 0.5 * dt * k1e, z + 0.5 * dt * k1z, A, b, v, c, L, H, W, is_pi, K, GS, Gd,
               holds, hold_dt, amp, freq, phase, k2e, k2z)
        _deriv(t + 0.5 * dt, e + 0.5 * dt * k2e, z + 0.5 * dt * k2z, A, b, v, c, L, H, W, is_pi, K, GS, Gd,
               holds, hold_dt, amp, freq, phase, k3e, k3z)
        _deriv(t + dt, e + dt * k3e, z + dt * k3z, A, b, v, c, L, H, W, is_pi, K, GS, Gd,
               holds, hold_dt, amp, freq, phase, k4e, k4z)
        e = e + (dt / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
        z = z + (dt / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        norm = 0.0
        for i in range(n):
            norm += e[i] * e[i]
        if not (math.sqrt(norm) <= blowup):
            E[step + 1] = e
            Z[step + 1] = z
            return E[: step + 2], Z[: step + 2], step + 1
        E[step + 1] = e
        Z[step + 1] = z
    return E, Z, -1
