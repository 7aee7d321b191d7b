"""Performance certificates for the static update law W_hat = alpha K_b beta B^T P e."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError, UnsupportedFamily, ValidationError
from .linalg import as_symmetric, lam_min
from .lyapunov import NominalCertificate, check_eigenvalue_lift, g_derivative, g_eval
from .regressors import PolynomialRegressor
from .search import GRID_POINTS, REL_WIDTH, bisect, golden_section_min


@dataclass(frozen=True)
class StaticLawConfig:
    K_b: np.ndarray
    alpha: float
    b: float
    gamma: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        K_b = as_symmetric(np.atleast_2d(np.asarray(self.K_b, dtype=float)), "K_b")
        if lam_min(K_b) <= 0:
            raise ValidationError("K_b must be positive definite")
        if not self.alpha > 0:
            raise ValidationError("alpha must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError("gamma must lie in [0, 1)")
        if self.mu < 0 or self.b < 0:
            raise ValidationError("mu and b must be non-negative")
        object.__setattr__(self, "K_b", K_b)

    @property
    def K(self) -> np.ndarray:
        return self.alpha * self.K_b

    @property
    def lift(self) -> float:
        """First argument of g in the bounds: alpha * b * gamma."""
        return self.alpha * self.b * self.gamma

    def with_(self, **changes) -> "StaticLawConfig":
        fields = dict(K_b=self.K_b, alpha=self.alpha, b=self.b, gamma=self.gamma, mu=self.mu)
        fields.update(changes)
        return StaticLawConfig(**fields)


@dataclass(frozen=True)
class BoundReport:
    r_e: float
    c_e: float
    residual: float
    settling_time: Optional[float] = None


def beta_inf_bound(beta, K_b) -> float:
    """Exact ``inf_x beta(x)^T K_b beta(x)``.

    Affine regressors reduce to a linear least-squares problem.  Degree-2
    regressors are exact only when constant rows are decoupled in K_b from
    rows that vanish at the origin.
    """
    if not isinstance(beta, PolynomialRegressor):
        raise UnsupportedFamily(f"no closed-form lower bound for regressor family {getattr(beta, 'family', type(beta).__name__)!r}")
    K_b = as_symmetric(np.atleast_2d(np.asarray(K_b, dtype=float)), "K_b")
    if K_b.shape[0] != beta.n_beta:
        raise ValidationError(f"K_b must be {beta.n_beta}x{beta.n_beta}")
    c, L = beta.const, beta.linear
    if beta.family in ("constant", "affine"):
        # inf || S (c + L x) ||^2 with S^T S = K_b
        S = np.linalg.cholesky(K_b).T
        Sc, SL = S @ c, S @ L
        x, *_ = np.linalg.lstsq(SL, -Sc, rcond=None)
        r = Sc + SL @ x
        return float(max(r @ r, 0.0))
    quad_rows = np.array([np.any(beta.quadratic[k]) or np.any(L[k]) for k in range(beta.n_beta)])
    const_rows = ~quad_rows
    if np.any(c[quad_rows]):
        raise UnsupportedFamily("degree-2 regressor rows must vanish at e = 0 for a closed-form bound")
    if np.any(K_b[np.ix_(const_rows, quad_rows)]):
        raise UnsupportedFamily("K_b couples constant and non-constant regressor rows")
    cc = c[const_rows]
    return float(cc @ K_b[np.ix_(const_rows, const_rows)] @ cc)


def _struct_term(cfg: StaticLawConfig, W) -> float:
    W = np.asarray(W, dtype=float).reshape(-1)
    if W.shape[0] != cfg.K_b.shape[0]:
        raise ValidationError(f"W must have {cfg.K_b.shape[0]} entries")
    return float(W @ np.linalg.solve(cfg.K_b, W))


def _radius(cert: NominalCertificate, cfg: StaticLawConfig, W, eta_star: float, mu: float) -> float:
    g_e = g_eval(cfg.lift, cert.Q, cert.v)
    num = _struct_term(cfg, W) + eta_star ** 2 / (cfg.b * (1.0 - cfg.gamma))
    return math.sqrt(cert.lam_max_P / (g_e * cert.lam_min_P)) * math.sqrt(num / cfg.alpha + mu)


def convergence_rate(cert: NominalCertificate, cfg: StaticLawConfig) -> float:
    return g_eval(cfg.lift, cert.Q, cert.v) / cert.lam_max_P


def ultimate_bound(cert: NominalCertificate, cfg: StaticLawConfig, W, eta_star: float) -> BoundReport:
    if cfg.b <= 0:
        raise ValidationError(
            "b = 0: the ultimate bound needs beta bounded away from zero; "
            "augment the regressor with a constant entry (beta, 1) and weights (W, 0)"
        )
    if eta_star < 0:
        raise ValidationError("eta_star must be non-negative")
    return BoundReport(
        r_e=_radius(cert, cfg, W, eta_star, cfg.mu),
        c_e=convergence_rate(cert, cfg),
        residual=_radius(cert, cfg, W, eta_star, 0.0),
    )


def transient_envelope(t, e0_norm: float, cert: NominalCertificate, cfg: StaticLawConfig, W, eta_star: float):
    """Upper bound on ||e(t)|| for ``||e(0)|| = e0_norm`` (scalar or array t)."""
    rep = ultimate_bound(cert, cfg.with_(mu=0.0), W, eta_star)
    if e0_norm < rep.residual:
        raise ValidationError(
            f"transient envelope does not apply: ||e(0)|| = {e0_norm:.6g} is below the residual {rep.residual:.6g}"
        )
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be non-negative")
    r2 = rep.residual ** 2
    head = cert.lam_max_P / cert.lam_min_P * e0_norm ** 2 - r2
    out = np.sqrt(r2 + np.exp(-rep.c_e * t) * head)
    return float(out) if out.ndim == 0 else out


def settling_time(V0: float, rho_mu: float, mu: float) -> float:
    if mu <= 0:
        raise ValidationError("settling time needs mu > 0")
    return max(V0 - rho_mu, 0.0) / mu


def settling_time_from(e0, cert: NominalCertificate, cfg: StaticLawConfig, W, eta_star: float) -> float:
    """Time after which ``e^T P e <= lambda_min(P) r_e(mu)^2`` is guaranteed.

    The weight term W^T Gamma^-1 W appears in both V(0) and rho(mu) and cancels.
    """
    e0 = np.asarray(e0, dtype=float)
    r = ultimate_bound(cert, cfg, W, eta_star).r_e
    return settling_time(float(e0 @ cert.P @ e0), cert.lam_min_P * r * r, cfg.mu)


def alpha_lower_bound(cert: NominalCertificate, b: float) -> float:
    """Smallest gain scaling above which the suboptimal gamma* exists."""
    if b <= 0:
        raise ValidationError("alpha lower bound needs b > 0")
    if not check_eigenvalue_lift(cert.Q, cert.v):
        raise ValidationError("lift condition fails at origin: g(1, Q, PB) = lambda_min(Q)")
    d = g_derivative(1e-8, cert.Q, cert.v).value
    if d <= 1e-12:
        raise ValidationError("lift condition fails at origin: dg/dphi(0+) = 0")
    return cert.lam_min_Q / (b * d)


def gamma_star(cert: NominalCertificate, cfg: StaticLawConfig) -> float:
    """Suboptimal gamma with ``r_e(gamma*) <= r_e(0)`` at mu = 0."""
    if cfg.b <= 0:
        raise ValidationError("gamma* needs b > 0")
    alpha_min = alpha_lower_bound(cert, cfg.b)
    if cfg.alpha <= alpha_min:
        raise ValidationError(f"alpha = {cfg.alpha:.6g} does not exceed the lower bound {alpha_min:.6g}")
    cap = cfg.alpha * cfg.b
    Q, v = cert.Q, cert.v

    def ok(phi: float) -> bool:
        d = g_derivative(phi, Q, v).value
        if d <= 0:
            return False
        return phi + g_eval(phi, Q, v) / d <= cap

    tiny = 1e-8 * cap
    if not ok(tiny):
        raise NumericalError("set M is empty although alpha exceeds its lower bound: inconsistent inputs")
    grid = np.linspace(0.0, cap, GRID_POINTS + 1)[1:]
    good = tiny
    bad = None
    for phi in grid:
        if phi <= good:
            continue
        if ok(phi):
            good = phi
        else:
            bad = phi
            break
    if bad is None:
        raise NumericalError("set M reaches alpha*b, contradicting Lipschitz continuity of g")
    phi_star = bisect(ok, good, bad, rtol=REL_WIDTH)
    gamma = phi_star / cap
    g0 = g_eval(0.0, Q, v)
    if (1.0 - gamma) * g_eval(phi_star, Q, v) < g0 * (1.0 - 1e-10):
        raise NumericalError("gamma* post-check failed: (1 - gamma*) g(alpha b gamma*) < g(0)")
    return gamma


def tau_growth_bound(cert: NominalCertificate, alpha: float, b: float) -> float:
    """Linear-growth threshold on |W^T beta(x)| / ||x|| that still guarantees e -> 0."""
    Q, v = cert.Q, cert.v
    p2 = 2.0 * alpha * b

    def lifted(eps: float) -> float:
        return g_eval(p2 - eps, Q, v)

    inside = p2 + cert.lam_min_Q / (2.0 * float(v @ v))
    outside = 2.0 * inside
    while lifted(outside) > 0:
        inside, outside = outside, 2.0 * outside
        if outside > 1e300:
            raise NumericalError("could not bracket sup E")
    sup_e = bisect(lambda eps: lifted(eps) > 0, inside, outside)

    def neg_obj(eps: float) -> float:
        return -eps * max(lifted(eps), 0.0)

    grid = np.linspace(0.0, sup_e, GRID_POINTS + 1)
    vals = np.array([neg_obj(e) for e in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    x, fx = golden_section_min(neg_obj, lo, hi)
    best = min(fx, float(vals[i]))
    if b > 0 and 0.0 < p2 < sup_e:
        best = min(best, neg_obj(p2))
    return math.sqrt(-best)
