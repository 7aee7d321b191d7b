"""Command-line front end: ``adaptctl <analyze|kyp|simulate|bode|reproduce>``.

Every command builds all of its outputs in memory first and only then writes
them, so a failure never leaves partial files behind.  Exit codes: 0 success,
2 configuration error, 3 infeasible, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import presets
from ._csv import csv_text
from .bounds import (StaticLawConfig, alpha_lower_bound, beta_inf_bound, convergence_rate,
                     gamma_star, tau_growth_bound, transient_envelope, ultimate_bound)
from .config import ExperimentConfig, BodeBlock, load_config, parse_config
from .errors import InfeasibleError, NumericalError, ValidationError
from .freqresp import bode_csv_text, bode_table
from .kyp import FrequencyGrid, certify, f_eval, lmi_residual, transfer_H
from .lyapunov import NominalCertificate, check_eigenvalue_lift, g_phi_star, g_profile
from .simulator import simulate, verify_uub
from .system import StaticLaw

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4
MAX_SEED = 2 ** 64 - 1


class Outputs:
    """Files and report lines accumulated by a command before anything touches disk."""

    def __init__(self):
        self.files: dict[str, str] = {}
        self.lines: list[str] = []

    def say(self, line: str = "") -> None:
        self.lines.append(line)

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def flush(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in sorted(self.files):
            with open(out_dir / name, "w", newline="\n") as fh:
                fh.write(self.files[name])


def thread_cap() -> int:
    raw = os.environ.get("ADAPTCTL_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"ADAPTCTL_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"ADAPTCTL_THREADS must be a positive integer, got {raw!r}")
    return n


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _certificate(cfg: ExperimentConfig, out: Outputs, seed: int = 0):
    """System plus certificate; a kyp block runs the full frequency-domain search."""
    sysm = cfg.system.build()
    cfg.require("certificate")
    if cfg.certificate.P is not None:
        return sysm, cfg.build_certificate(sysm), None
    k = cfg.certificate.kyp
    verdict = certify(sysm.A, sysm.B, np.array(k.v), k.varrho, k.kappa_fraction, seed=seed)
    cert = NominalCertificate.from_P(sysm.A, sysm.B, verdict.P)
    out.say(f"certificate from KYP search: P = {verdict.P.tolist()}")
    return sysm, cert, verdict


# ---------------------------------------------------------------- analyze

def run_analyze(cfg: ExperimentConfig, seed: Optional[int]) -> Outputs:
    cfg.require("uncertainty", "analysis")
    out = Outputs()
    sysm, cert, _ = _certificate(cfg, out)
    an = cfg.analysis
    unc = cfg.build_uncertainty(seed)
    nb = unc.beta.n_beta
    K_b = np.eye(nb) * an.K_b if np.isscalar(an.K_b) else np.array(an.K_b)
    b = beta_inf_bound(unc.beta, K_b)
    eta_star = an.eta_star if an.eta_star is not None else unc.eta.eta_star
    lift = check_eigenvalue_lift(cert.Q, cert.v)
    try:
        phi_star = g_phi_star(cert.Q, cert.v).phi_star
    except ValidationError:
        phi_star = None
    try:
        a_lb = alpha_lower_bound(cert, b)
    except ValidationError:
        a_lb = None
    out.say(f"b = {b:.10g}")
    out.say(f"lift: g(1, Q, PB) > lambda_min(Q) is {lift}")
    out.say(f"phi* = {phi_star if phi_star is not None else 'n/a'}")
    out.say(f"alpha lower bound = {a_lb:.10g}" if a_lb is not None else "alpha lower bound = n/a")
    out.say(f"eta* = {eta_star:.10g}")

    header = ("alpha", "b", "lift", "gamma", "gamma_source", "r_e", "residual", "c_e",
              "alpha_lower_bound", "tau", "phi_star")
    rows = []
    for alpha in an.alphas:
        base = StaticLawConfig(K_b, alpha, b, 0.0, an.mu)
        if an.gamma == "star":
            try:
                gamma, source = gamma_star(cert, base), "star"
            except ValidationError:
                gamma, source = 0.0, "fallback"
        else:
            gamma, source = float(an.gamma), "given"
        scfg = base.with_(gamma=gamma)
        c_e = convergence_rate(cert, scfg)
        if b > 0:
            rep = ultimate_bound(cert, scfg, unc.W, eta_star)
            r_e, residual = rep.r_e, rep.residual
        else:
            r_e = residual = None
        tau = tau_growth_bound(cert, alpha, b)
        rows.append([alpha, b, lift, gamma, source, r_e, residual, c_e, a_lb, tau, phi_star])
        line = f"alpha = {alpha:g}: gamma = {gamma:.6g} ({source}), c_e = {c_e:.6g}, tau = {tau:.6g}"
        if r_e is not None:
            line += f", r_e = {r_e:.6g}, residual = {residual:.6g}"
        else:
            line += ", r_e = n/a (b = 0)"
        out.say(line)
    out.add("analyze.csv", csv_text(header, [[_fmt(x) for x in r] for r in rows]))
    out.add("analyze.txt", "\n".join(out.lines) + "\n")
    return out


# ---------------------------------------------------------------- kyp

def _f_sweep(sysm, v, kappa, grid) -> str:
    theta = kappa * float(v @ v)
    rows = []
    for w in grid.omegas:
        rows.append((w, transfer_H(sysm.A, sysm.B, v, w).real,
                     f_eval(w, kappa, theta, v, sysm.A, sysm.B),
                     f_eval(w, 0.0, theta, v, sysm.A, sysm.B)))
    return csv_text(("omega", "re_H", "f_criterion", "f_psi_free"), rows)


def run_kyp(cfg: ExperimentConfig, seed: Optional[int]) -> Outputs:
    return _kyp(cfg, seed)[0]


def _kyp(cfg: ExperimentConfig, seed: Optional[int]):
    cfg.require("certificate")
    if cfg.certificate.kyp is None:
        raise ValidationError("certificate.kyp: field required for this command")
    out = Outputs()
    sysm = cfg.system.build()
    k = cfg.certificate.kyp
    v = np.array(k.v, dtype=float)
    grid = FrequencyGrid.default()
    verdict = certify(sysm.A, sysm.B, v, k.varrho, k.kappa_fraction, grid, seed=seed or 0)
    cert = NominalCertificate.from_P(sysm.A, sysm.B, verdict.P)
    res = cert.residual(sysm.A)
    summary = [
        ("spr", verdict.spr), ("sup_K", verdict.sup_K), ("sup_K_omega", verdict.sup_K_omega),
        ("kappa", verdict.kappa), ("criterion_43", verdict.criterion_43),
        ("criterion_44_limit", verdict.criterion_44_limit),
        ("psi_free_witness", verdict.psi_free_witness), ("lmi_lambda_max", verdict.lam_max),
        ("lift", verdict.lift), ("lyapunov_residual", res), ("grid_points", verdict.grid_points),
    ]
    for i in range(sysm.n):
        for j in range(sysm.n):
            summary.append((f"P{i + 1}{j + 1}", float(verdict.P[i, j])))
    for i in range(sysm.n):
        for j in range(sysm.n):
            summary.append((f"Q{i + 1}{j + 1}", float(verdict.Q[i, j])))
    for i, lam in enumerate(np.linalg.eigvalsh(lmi_residual(sysm.A, verdict.P, v, verdict.kappa))):
        summary.append((f"lmi_residual_eig{i + 1}", float(lam)))
    for key, val in summary:
        out.say(f"{key} = {_fmt(val)}")
    out.add("kyp.csv", csv_text(("key", "value"), [(k_, _fmt(v_)) for k_, v_ in summary]))
    out.add("kyp_f.csv", _f_sweep(sysm, v, verdict.kappa, grid))
    out.add("kyp.txt", "\n".join(out.lines) + "\n")
    return out, cert


# ---------------------------------------------------------------- simulate

def _static_bound(cert, unc, law):
    """Residual radius for a static law (K_b = K, alpha = 1, gamma = 0, mu = 0), or None."""
    try:
        b = beta_inf_bound(unc.beta, law.K)
        if b <= 0:
            return None, None
        scfg = StaticLawConfig(law.K, 1.0, b)
        return ultimate_bound(cert, scfg, unc.W, unc.eta.eta_star).residual, scfg
    except ValidationError:
        return None, None


def run_simulate(cfg: ExperimentConfig, seed: Optional[int]) -> Outputs:
    cfg.require("uncertainty", "run")
    if not cfg.laws:
        raise ValidationError("laws: at least one update law is required for this command")
    out = Outputs()
    sysm, cert, _ = _certificate(cfg, out)
    unc = cfg.build_uncertainty(seed)
    run = cfg.run
    laws = [(lb.type, lb.label(i), lb.build(unc.beta.n_beta)) for i, lb in enumerate(cfg.laws)]
    names = [f"{kind}_{tag}" for kind, tag, _ in laws]
    if len(set(names)) != len(names):
        raise ValidationError("laws: type/tag pairs must be unique (set laws.N.tag)")
    z0 = None if run.z0 is None else np.array(run.z0)

    def job(item):
        kind, _, law = item
        return simulate(sysm, cert, unc, law, np.array(run.e0), z0 if kind == "pi" else None,
                        run.t_final, run.dt)

    with ThreadPoolExecutor(max_workers=min(thread_cap(), len(laws))) as pool:
        trajs = list(pool.map(job, laws))

    e0_norm = float(np.linalg.norm(run.e0))
    header = ("law", "tag", "seed", "tail_max", "r_e", "inside", "entry_time")
    rows = []
    for (kind, tag, law), name, traj in zip(laws, names, trajs):
        out.add(f"traj_{name}.csv", traj.csv_text())
        r_e, scfg = _static_bound(cert, unc, law) if isinstance(law, StaticLaw) else (None, None)
        if r_e is None:
            tail = verify_uub(traj, math.inf, run.tail_fraction).tail_max
            rows.append((kind, tag, unc.eta.seed, tail, None, None, None))
            out.say(f"{name}: tail max |e| = {tail:.6g} (no certified radius)")
            continue
        rep = verify_uub(traj, r_e, run.tail_fraction)
        rows.append((kind, tag, unc.eta.seed, rep.tail_max, r_e, rep.inside, rep.entry_time))
        verdict = "inside" if rep.inside else "OUTSIDE"
        out.say(f"{name}: tail max |e| = {rep.tail_max:.6g}, r_e = {r_e:.6g} -> {verdict}")
        if e0_norm >= r_e:
            env = transient_envelope(traj.times, e0_norm, cert, scfg, unc.W, unc.eta.eta_star)
            dominated = bool(np.all(traj.e_norm <= env * (1 + 1e-12)))
            out.say(f"{name}: envelope dominates |e(t)|: {dominated}")
            out.add(f"envelope_{name}.csv",
                    csv_text(("t", "e_norm", "envelope"), np.column_stack([traj.times, traj.e_norm, env])))
    out.add("uub.csv", csv_text(header, [[_fmt(x) for x in r] for r in rows]))
    out.add("simulate.txt", "\n".join(out.lines) + "\n")
    return out


# ---------------------------------------------------------------- bode

def _require_linear_beta(cfg: ExperimentConfig) -> None:
    u = cfg.uncertainty
    if u is None:
        return
    beta = u.beta
    linear = (len(beta.const) == 1 and beta.const[0] == 1.0
              and not np.any(beta.linear or 0) and not np.any(beta.quadratic or 0))
    if not linear:
        raise ValidationError(
            "uncertainty.beta: frequency-domain analysis is restricted to the purely linear case beta = 1"
        )


def run_bode(cfg: ExperimentConfig, seed: Optional[int]) -> Outputs:
    _require_linear_beta(cfg)
    if not cfg.laws:
        raise ValidationError("laws: at least one update law is required for this command")
    out = Outputs()
    sysm, cert, _ = _certificate(cfg, out)
    grid = (cfg.bode or BodeBlock()).grid()
    laws = [(lb.type, lb.label(i), lb.build(1)) for i, lb in enumerate(cfg.laws)]
    names = [f"bode_{kind}_{tag}.csv" for kind, tag, _ in laws]
    if len(set(names)) != len(names):
        raise ValidationError("laws: type/tag pairs must be unique (set laws.N.tag)")
    for (kind, tag, law), name in zip(laws, names):
        rows = bode_table(law, sysm, cert, grid)
        out.add(name, bode_csv_text(rows))
        if rows:
            out.say(f"{name}: |S| at omega = {rows[0].omega:g} is {rows[0].mag_db:.6g} dB")
        else:
            out.say(f"{name}: empty grid")
    return out


# ---------------------------------------------------------------- reproduce

FIG1_GP = """set terminal pngcairo size 800,900
set output 'fig1.png'
set datafile separator ','
set multiplot layout 2,1
set logscale x
set xlabel 'omega [rad/s]'
set ylabel 'f(omega)'
plot 'kyp_f.csv' using 1:3 with lines title 'criterion', \\
     'kyp_f.csv' using 1:4 with lines lc rgb 'red' title 'psi-free', 0 notitle
unset logscale x
set xlabel 'phi'
set ylabel 'g(phi, Q, PB)'
plot 'fig1_g.csv' using 1:2 with lines title 'g'
unset multiplot
"""


def _fig2_gp(names) -> str:
    lines = ["set terminal pngcairo size 900,500", "set output 'fig2.png'",
             "set datafile separator ','", "set xlabel 't [s]'", "set ylabel 'e_1'"]
    parts = []
    for n in names:
        dash = "dt 2" if n.startswith("static") else "dt 1"
        parts.append(f"'traj_{n}.csv' using 1:2 every 10 with lines {dash} title '{n}'")
    lines.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(lines) + "\n"


def _fig3_gp(files) -> str:
    head = ["set terminal pngcairo size 800,900", "set output 'fig3.png'",
            "set datafile separator ','", "set logscale x", "set multiplot layout 2,1"]
    body = []
    for col, label in ((2, "|S| [dB]"), (3, "phase [deg]")):
        parts = []
        for f in files:
            dash = "dt 2" if f.startswith("bode_static") else "dt 1"
            parts.append(f"'{f}' using 1:{col} with lines {dash} title '{f[5:-4]}'")
        body.append(f"set ylabel '{label}'")
        body.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(head + ["set xlabel 'omega [rad/s]'"] + body + ["unset multiplot"]) + "\n"


def run_reproduce(figure: int, seed: Optional[int]) -> Outputs:
    if figure not in presets.FIGURES:
        raise ValidationError(f"figure: unknown figure id {figure}; choose 1, 2 or 3")
    if figure == 1:
        cfg = parse_config(presets.figure1_config())
        out, cert = _kyp(cfg, seed)
        prof = g_profile(cert.Q, cert.v, np.linspace(-2.0, 20.0, 441))
        out.add("fig1_g.csv", csv_text(("phi", "g"), prof.samples))
        out.add("fig1.gp", FIG1_GP)
        return out
    if figure == 2:
        cfg = parse_config(presets.figure2_config(seed or 0))
        out = run_simulate(cfg, None)
        names = [f"{lb.type}_{lb.label(i)}" for i, lb in enumerate(cfg.laws)]
        out.add("fig2.gp", _fig2_gp(names))
        return out
    cfg = parse_config(presets.figure3_config())
    out = run_bode(cfg, seed)
    out.add("fig3.gp", _fig3_gp(sorted(f for f in out.files if f.startswith("bode_"))))
    return out


# ---------------------------------------------------------------- entry point

def _seed(text: str) -> int:
    try:
        s = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= s <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64 - 1], got {text}")
    return s


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaptctl", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=("analyze", "kyp", "simulate", "bode", "reproduce"))
    p.add_argument("--config", help="experiment config (JSON, schema 1)")
    p.add_argument("--figure", type=int, help="figure id for reproduce (1, 2 or 3)")
    p.add_argument("--out", help="output directory (default: config 'output' or ./out)")
    p.add_argument("--seed", type=_seed, help="noise seed override")
    return p


COMMANDS = {"analyze": run_analyze, "kyp": run_kyp, "simulate": run_simulate, "bode": run_bode}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            if args.figure is None:
                raise ValidationError("--figure is required for reproduce")
            out = run_reproduce(args.figure, args.seed)
            out_dir = Path(args.out or f"out/fig{args.figure}")
        else:
            if args.config is None:
                raise ValidationError(f"--config is required for {args.command}")
            cfg = load_config(args.config)
            out = COMMANDS[args.command](cfg, args.seed)
            out_dir = Path(args.out or cfg.output)
    except ValidationError as exc:
        print(f"adaptctl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"adaptctl: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"adaptctl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out.flush(out_dir)
    for line in out.lines:
        print(line)
    print(f"wrote {len(out.files)} file(s) to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
