"""Built-in constants and configurations for the second-order example study.

Every number here is quoted from the example study unless marked as a chosen
value; chosen values fill gaps the study leaves open and are kept small in number.
"""
import numpy as np

# Generic second order dynamics, natural frequency 1 and damping 2^(-1/2).
OMEGA0 = 1.0
ZETA = 2.0 ** -0.5

# Certificate vector v = (1, 2/2^(1/2)) making H(s) SPR, and its slack variables.
V_EXAMPLE = (1.0, 2.0 / 2.0 ** 0.5)
VARRHO = 0.75
KAPPA_FRACTION = 0.9

# Printed certificate. PB = v with B = (0, 1) pins P12 = 1 and P22 = sqrt(2);
# the printed 1.4142 is that value rounded.
APPENDIX_P = np.array([[3.9598, 1.0], [1.0, 2.0 ** 0.5]])

# Update-law parameters: Gamma = 2 I, Sigma = 0.2 I, so Sigma^-1 = 5 I.
GAMMA_PI = 2.0
SIGMA_PI = 0.2

# Structured uncertainty beta(e) = (1, -e2), W = (1, 1): offset plus viscous friction.
BETA_CONST = [1.0, 0.0]
BETA_LINEAR = [[0.0, 0.0], [0.0, -1.0]]
W_EXAMPLE = [1.0, 1.0]

# Unstructured uncertainty: white-noise holds plus 0.05 sin(omega_r t).
OMEGA_R = 1.7179
SINE_AMPLITUDE = 0.05
NOISE_CAP = 0.01  # chosen: the study leaves the white-noise power open
NOISE_HOLD = 0.01  # chosen

# Gains swept in the time- and frequency-domain figures (chosen around Sigma^-1 = 5).
FIG2_GAINS = (2.5, 5.0, 10.0)
FIG3_PI_GAINS = (0.0, 2.5, 5.0, 10.0)
FIG3_STATIC_GAINS = (2.5, 5.0, 10.0)
FIG2_E0 = [0.0, 1.0]  # chosen: initial error in the velocity only
FIG2_T_FINAL = 40.0
FIG2_DT = 1e-3


def _system():
    return {"omega0": OMEGA0, "zeta": ZETA}


def figure1_config() -> dict:
    return {
        "schema": 1,
        "system": _system(),
        "certificate": {"kyp": {"v": list(V_EXAMPLE), "varrho": VARRHO,
                                "kappa_fraction": KAPPA_FRACTION}},
    }


def figure2_config(seed: int = 0) -> dict:
    laws = []
    for k in FIG2_GAINS:
        laws.append({"type": "static", "K": k, "tag": f"K{k:g}"})
        laws.append({"type": "pi", "K": k, "Gamma": GAMMA_PI, "Sigma": SIGMA_PI, "tag": f"K{k:g}"})
    return {
        "schema": 1,
        "system": _system(),
        "certificate": {"P": APPENDIX_P.tolist()},
        "uncertainty": {
            "beta": {"family": "affine", "const": BETA_CONST, "linear": BETA_LINEAR},
            "W": W_EXAMPLE,
            "noise": {"seed": seed, "sample_dt": NOISE_HOLD, "amplitude_bound": NOISE_CAP,
                      "sinusoids": [[SINE_AMPLITUDE, OMEGA_R, 0.0]]},
        },
        "laws": laws,
        "run": {"dt": FIG2_DT, "t_final": FIG2_T_FINAL, "e0": FIG2_E0},
    }


def figure3_config() -> dict:
    laws = [{"type": "pi", "K": k, "Gamma": GAMMA_PI, "Sigma": SIGMA_PI, "tag": f"K{k:g}"}
            for k in FIG3_PI_GAINS]
    laws += [{"type": "static", "K": k, "tag": f"K{k:g}"} for k in FIG3_STATIC_GAINS]
    return {
        "schema": 1,
        "system": _system(),
        "certificate": {"P": APPENDIX_P.tolist()},
        "uncertainty": {"beta": {"family": "constant", "const": [1.0]}, "W": [1.0]},
        "laws": laws,
        "bode": {"omega_min": 1e-3, "omega_max": 1e3, "points": 601},
    }


FIGURES = {1: figure1_config, 2: figure2_config, 3: figure3_config}
