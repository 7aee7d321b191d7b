"""Experiment configuration (JSON, ``schema: 1``) and its translation to domain objects."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from .errors import ValidationError
from .lyapunov import NominalCertificate
from .regressors import PolynomialRegressor
from .simulator import NoiseSpec, UncertaintyModel
from .system import LinearErrorSystem, PILaw, StaticLaw

Matrix = list[list[float]]
Gain = Union[float, Matrix]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemBlock(_Block):
    A: Optional[Matrix] = None
    B: Optional[list[float]] = None
    omega0: Optional[float] = None
    zeta: Optional[float] = None

    @model_validator(mode="after")
    def _one_form(self):
        explicit = self.A is not None or self.B is not None
        shorthand = self.omega0 is not None or self.zeta is not None
        if explicit == shorthand:
            raise ValueError("give either A and B, or the shorthand omega0 and zeta")
        if explicit and (self.A is None or self.B is None):
            raise ValueError("both A and B are required")
        if shorthand and (self.omega0 is None or self.zeta is None):
            raise ValueError("both omega0 and zeta are required")
        return self

    def build(self) -> LinearErrorSystem:
        if self.A is not None:
            return LinearErrorSystem(np.array(self.A), np.array(self.B))
        return LinearErrorSystem.second_order(self.omega0, self.zeta)


class KypBlock(_Block):
    v: list[float]
    varrho: float = 0.75
    kappa_fraction: float = 0.9


class CertificateBlock(_Block):
    P: Optional[Matrix] = None
    kyp: Optional[KypBlock] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.P is None) == (self.kyp is None):
            raise ValueError("exactly one certificate source is required: P or kyp")
        return self


class BetaBlock(_Block):
    family: Literal["constant", "affine", "polynomial"]
    const: list[float]
    linear: Optional[Matrix] = None
    quadratic: Optional[list[Matrix]] = None

    def build(self, n: int) -> PolynomialRegressor:
        nb = len(self.const)
        L = np.zeros((nb, n)) if self.linear is None else np.array(self.linear, dtype=float)
        H = np.zeros((nb, n, n)) if self.quadratic is None else np.array(self.quadratic, dtype=float)
        beta = PolynomialRegressor(np.array(self.const), L, H)
        if self.family == "constant" and beta.family != "constant":
            raise ValidationError("beta.family is 'constant' but linear/quadratic terms are present")
        if self.family == "affine" and beta.family == "polynomial":
            raise ValidationError("beta.family is 'affine' but quadratic terms are present")
        return beta


class NoiseBlock(_Block):
    seed: int = 0
    sample_dt: float = Field(0.01, gt=0)
    amplitude_bound: float = Field(0.01, ge=0)
    sinusoids: list[tuple[float, float, float]] = [(0.05, 1.7179, 0.0)]

    def build(self, seed: Optional[int] = None) -> NoiseSpec:
        return NoiseSpec(self.seed if seed is None else seed, self.sample_dt,
                         self.amplitude_bound, tuple(self.sinusoids))


class UncertaintyBlock(_Block):
    beta: BetaBlock
    W: list[float]
    noise: Optional[NoiseBlock] = None


class LawBlock(_Block):
    type: Literal["static", "pi"]
    K: Gain
    Gamma: Optional[Gain] = None
    Sigma: Optional[Gain] = None
    tag: Optional[str] = None

    @model_validator(mode="after")
    def _pi_gains(self):
        if self.type == "pi" and (self.Gamma is None or self.Sigma is None):
            raise ValueError("PI law needs Gamma and Sigma")
        if self.type == "static" and (self.Gamma is not None or self.Sigma is not None):
            raise ValueError("static law takes only K")
        return self

    def build(self, n_beta: int):
        def gain(x):
            return np.eye(n_beta) * x if np.isscalar(x) else np.array(x, dtype=float)
        if self.type == "static":
            return StaticLaw(gain(self.K))
        return PILaw(gain(self.K), gain(self.Gamma), gain(self.Sigma))

    def label(self, index: int) -> str:
        if self.tag:
            return self.tag
        return f"K{self.K:g}" if np.isscalar(self.K) else f"law{index}"


class AnalysisBlock(_Block):
    K_b: Gain = 1.0
    alpha: Union[float, list[float]] = 1.0
    gamma: Union[float, Literal["star"]] = 0.0
    mu: float = Field(0.0, ge=0)
    eta_star: Optional[float] = Field(None, ge=0)

    @property
    def alphas(self) -> list[float]:
        return [self.alpha] if isinstance(self.alpha, (int, float)) else list(self.alpha)


class RunBlock(_Block):
    dt: float = Field(1e-3, gt=0)
    t_final: float = Field(50.0, gt=0)
    e0: list[float]
    z0: Optional[list[float]] = None
    tail_fraction: float = Field(0.25, gt=0, le=1)


class BodeBlock(_Block):
    omega_min: float = Field(1e-2, gt=0)
    omega_max: float = Field(1e2, gt=0)
    points: int = Field(200, ge=0)

    def grid(self) -> np.ndarray:
        if self.points == 0:
            return np.array([])
        return np.logspace(np.log10(self.omega_min), np.log10(self.omega_max), self.points)


class ExperimentConfig(_Block):
    schema_version: Literal[1] = Field(alias="schema")
    system: SystemBlock
    certificate: Optional[CertificateBlock] = None
    uncertainty: Optional[UncertaintyBlock] = None
    laws: list[LawBlock] = []
    analysis: Optional[AnalysisBlock] = None
    run: Optional[RunBlock] = None
    bode: Optional[BodeBlock] = None
    output: str = "out"

    @model_validator(mode="after")
    def _dimensions(self):
        s = self.system
        if s.A is not None:
            n = len(s.A)
            if any(len(r) != n for r in s.A):
                raise ValueError("system.A must be square")
            if len(s.B) != n:
                raise ValueError(f"system.B must have {n} entries")
        else:
            n = 2
        c = self.certificate
        if c is not None and c.P is not None and (len(c.P) != n or any(len(r) != n for r in c.P)):
            raise ValueError(f"certificate.P must be {n}x{n}")
        if c is not None and c.kyp is not None and len(c.kyp.v) != n:
            raise ValueError(f"certificate.kyp.v must have {n} entries")
        nb = None
        if self.uncertainty is not None:
            b = self.uncertainty.beta
            nb = len(b.const)
            if b.linear is not None and (len(b.linear) != nb or any(len(r) != n for r in b.linear)):
                raise ValueError(f"uncertainty.beta.linear must be {nb}x{n}")
            if b.quadratic is not None:
                shape = np.shape(b.quadratic)
                if shape != (nb, n, n):
                    raise ValueError(f"uncertainty.beta.quadratic must have shape ({nb}, {n}, {n})")
            if len(self.uncertainty.W) != nb:
                raise ValueError(f"uncertainty.W must have {nb} entries")
        if nb is not None:
            for i, law in enumerate(self.laws):
                for name in ("K", "Gamma", "Sigma"):
                    g = getattr(law, name)
                    if g is not None and not np.isscalar(g) and np.shape(g) != (nb, nb):
                        raise ValueError(f"laws.{i}.{name} must be scalar or {nb}x{nb}")
            if self.analysis is not None and not np.isscalar(self.analysis.K_b) \
                    and np.shape(self.analysis.K_b) != (nb, nb):
                raise ValueError(f"analysis.K_b must be scalar or {nb}x{nb}")
        if self.run is not None:
            if len(self.run.e0) != n:
                raise ValueError(f"run.e0 must have {n} entries")
            if self.run.z0 is not None and nb is not None and len(self.run.z0) != nb:
                raise ValueError(f"run.z0 must have {nb} entries")
        return self

    @property
    def n_beta(self) -> int:
        return 1 if self.uncertainty is None else len(self.uncertainty.beta.const)

    def require(self, *blocks: str) -> None:
        missing = [b for b in blocks if not getattr(self, b)]
        if missing:
            raise ValidationError("; ".join(f"{b}: field required for this command" for b in missing))

    def build_uncertainty(self, seed: Optional[int] = None) -> UncertaintyModel:
        u = self.uncertainty
        n = self.system.build().n
        noise = u.noise.build(seed) if u.noise is not None else NoiseSpec.zero()
        return UncertaintyModel(u.beta.build(n), np.array(u.W), noise)

    def build_certificate(self, sys: LinearErrorSystem) -> NominalCertificate:
        """Explicit P only; KYP-sourced certificates are produced by the kyp pipeline."""
        return NominalCertificate.from_P(sys.A, sys.B, np.array(self.certificate.P))


def format_pydantic_error(exc: PydanticValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "\n".join(lines)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except PydanticValidationError as exc:
        raise ValidationError(format_pydantic_error(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("config root must be a JSON object")
    return parse_config(data)
