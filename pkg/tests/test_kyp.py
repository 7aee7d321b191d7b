import math

import numpy as np
import pytest

from adaptctl.errors import IndeterminateLimitError, InfeasibleError, ValidationError
from adaptctl.kyp import (FrequencyGrid, certify, check_criteria_43_44, check_spr, criterion_44_limit,
                          f_eval, find_P_lmi, freq_response_G, lmi_residual, psi_free_criterion,
                          sup_K_bound, transfer_H)
from adaptctl.lyapunov import check_eigenvalue_lift, solve_lyapunov
from adaptctl.presets import APPENDIX_P

from conftest import SQRT2, random_hurwitz, random_spd

V = np.array([1.0, SQRT2])
GRID = FrequencyGrid.default()


def den2(w):
    return (1 - w * w) ** 2 + 2 * w * w


def test_grid_validation():
    with pytest.raises(ValidationError):
        FrequencyGrid(np.array([0.1, 1.0]))
    with pytest.raises(ValidationError):
        FrequencyGrid(np.array([0.0, 2.0, 1.0]))
    assert len(GRID) == 4097


def test_G_examples(example_system):
    A, B = example_system.A, example_system.B
    assert np.allclose(freq_response_G(-np.eye(2), [1.0, 0.0], 0.0), [1.0, 0.0])
    for w in (0.0, 0.3, 1.0, 7.0):
        ref = np.array([1.0, 1j * w]) / (1 - w * w + 1j * SQRT2 * w)
        assert np.allclose(freq_response_G(A, B, w), ref, atol=1e-14)
    G = freq_response_G(A, B, 1e6)
    assert np.linalg.norm(G) * 1e6 == pytest.approx(np.linalg.norm(B), rel=1e-5)


def test_G_residual_on_grid(example_system):
    A, B = example_system.A, example_system.B
    for w in GRID.omegas[::16]:
        G = freq_response_G(A, B, w)
        assert np.linalg.norm((1j * w * np.eye(2) - A) @ G - B) <= 1e-10 * np.linalg.norm(B)


def test_G_singular():
    with pytest.raises(ValidationError):
        freq_response_G(np.array([[0.0, 1.0], [-1.0, 0.0]]), [0.0, 1.0], 1.0)


def test_f_examples(example_system):
    A, B = example_system.A, example_system.B
    assert f_eval(0.0, 0.0, 0.8 * 3, V, A, B) == pytest.approx(-0.4, abs=1e-12)
    for w in (0.0, 0.5, 2.0, 30.0):
        assert f_eval(w, 0.0, 0.0, V, A, B) == pytest.approx(2 * (1 + w * w) / den2(w), rel=1e-12)
        G = freq_response_G(A, B, w)
        assert f_eval(w, 0.7, 1.3, [0.0, 0.0], A, B) == pytest.approx(-1.3 * np.vdot(G, G).real)
        # criterion function at kappa = 0.8
        assert f_eval(w, 0.8, 2.4, V, A, B) == pytest.approx((0.4 + 1.2 * w * w) / den2(w), rel=1e-10)


def test_spr_examples(example_system):
    A, B = example_system.A, example_system.B
    r = check_spr(A, B, V, GRID)
    assert r.spr and r.poles_stable
    assert r.limit == pytest.approx(1.0, abs=1e-12)
    for w in GRID.omegas[::64]:
        assert transfer_H(A, B, V, w).real == pytest.approx((1 + w * w) / den2(w), abs=1e-10)
    assert not check_spr(A, B, [0.0, 1.0], GRID).spr
    assert check_spr(np.array([[-1.0]]), [1.0], [1.0], GRID).spr


def test_spr_indeterminate_limit():
    # A B = (1, -1), so v = (1, 1) gives v^T A B = 0
    A = np.array([[0.0, 1.0], [-1.0, -1.0]])
    with pytest.raises(IndeterminateLimitError):
        check_spr(A, [0.0, 1.0], [1.0, 1.0], GRID)


def test_spr_uncontrollable():
    with pytest.raises(ValidationError):
        check_spr(-np.eye(2), [1.0, 0.0], [1.0, 0.0], GRID)


def test_criteria_example(example_system):
    A, B = example_system.A, example_system.B
    c = check_criteria_43_44(A, B, V, 0.8, GRID)
    assert c.holds and c.criterion_43
    assert c.limit == pytest.approx(1.2, abs=1e-12)
    holds, limit = c
    assert holds and limit == c.limit
    c2 = check_criteria_43_44(A, B, V, 2.0, GRID)
    assert not c2.criterion_43
    assert c2.f_min <= 2 - 2 * 2.0 + 1e-12


def test_criteria_zero_v(example_system):
    assert not check_criteria_43_44(example_system.A, example_system.B, [0.0, 0.0], 0.8, GRID).holds


def test_criterion_44_limit_numeric():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(2, 4))
        A = random_hurwitz(rng, n)
        B = rng.normal(size=n)
        v = rng.normal(size=n)
        k = rng.uniform(0, 2)
        lim = criterion_44_limit(A, B, v, k)
        w = 1e5
        G = freq_response_G(A, B, w)
        num = f_eval(w, k, k * v @ v, v, A, B) / np.vdot(G, G).real
        assert num == pytest.approx(lim, rel=1e-3, abs=1e-6)


def test_sup_K_examples(example_system):
    A, B = example_system.A, example_system.B
    s = sup_K_bound(A, B, V, 0.75, GRID)
    assert s.value == pytest.approx(8 / 9, abs=1e-9)
    assert s.omega == 0.0
    assert 0.9 * s.value == pytest.approx(0.8, abs=1e-9)
    assert sup_K_bound(A, B, V, 0.0, GRID).value == pytest.approx(2 / 3, abs=1e-9)


def test_sup_K_brute_force(example_system):
    A, B = example_system.A, example_system.B
    x = np.linspace(0, 1e4, 200_001)
    ratio = 2 * (1 + x) / (2.25 + 1.5 * x)
    assert sup_K_bound(A, B, V, 0.75, GRID).value == pytest.approx(ratio.min(), abs=1e-12)


def test_sup_K_requires_spr(example_system):
    with pytest.raises(ValidationError, match="SPR"):
        sup_K_bound(example_system.A, example_system.B, [0.0, 1.0], 0.75, GRID)


def test_psi_free_examples(example_system):
    A, B = example_system.A, example_system.B
    found, w = psi_free_criterion(A, B, V, 0.8, GRID)
    assert found and w == 0.0
    assert f_eval(w, 0.0, 0.8 * 3, V, A, B) == pytest.approx(-0.4, abs=1e-9)
    assert psi_free_criterion(A, B, V, 1e-6, GRID) == (False, None)
    found0, _ = psi_free_criterion(A, B, [0.0, 0.0], 0.8, GRID)
    assert found0


def test_lmi_residual_example(example_system):
    R = lmi_residual(example_system.A, APPENDIX_P, V, 0.8)
    assert R[0, 0] == pytest.approx(-0.4, abs=1e-3)
    assert R[1, 1] == pytest.approx(-1.2, abs=1e-12)
    assert abs(R[0, 1]) <= 1e-3


def test_find_P_example(example_system):
    sol = find_P_lmi(example_system.A, example_system.B, V, 0.8)
    assert np.allclose(sol.P @ example_system.B, V, atol=1e-12)
    assert sol.lam_max < -1e-8
    assert np.allclose(sol.P, APPENDIX_P, atol=1e-3)
    assert np.all(np.linalg.eigvalsh(sol.P) > 0) and np.all(np.linalg.eigvalsh(sol.Q) > 0)


def test_find_P_scalar():
    sol = find_P_lmi(np.array([[-1.0]]), [1.0], [1.0], 0.1)
    assert sol.P[0, 0] == pytest.approx(1.0)
    assert sol.lam_max == pytest.approx(-2.0)


def test_find_P_infeasible(example_system):
    with pytest.raises(InfeasibleError) as info:
        find_P_lmi(example_system.A, example_system.B, V, 2.0, budget=5_000)
    assert info.value.best is not None and info.value.best >= 0


def test_find_P_with_psi(example_system):
    sol = find_P_lmi(example_system.A, example_system.B, V, 0.8, strict=False, psi=0.3)
    R = lmi_residual(example_system.A, sol.P, V, 0.8, 0.3)
    assert np.linalg.eigvalsh(R).max() <= 1e-12


def test_find_P_deterministic(example_system):
    a = find_P_lmi(example_system.A, example_system.B, V, 0.8, seed=4)
    b = find_P_lmi(example_system.A, example_system.B, V, 0.8, seed=4)
    assert np.array_equal(a.P, b.P)


def test_certify_example(example_system):
    v = certify(example_system.A, example_system.B, V, 0.75, 0.9)
    assert v.spr and v.criterion_43 and v.lift
    assert v.kappa == pytest.approx(0.8, abs=1e-9)
    assert v.psi_free_witness == 0.0
    assert np.allclose(v.P @ example_system.B, V, atol=1e-9)


def test_certify_overshoot(example_system):
    with pytest.raises(InfeasibleError):
        certify(example_system.A, example_system.B, V, 0.75, 1.5)


def random_spr_plant(rng, n):
    while True:
        A = random_hurwitz(rng, n)
        B = rng.normal(size=n)
        ctrb = np.column_stack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
        if np.linalg.cond(ctrb) < 1e4:
            break
    P = solve_lyapunov(A, random_spd(rng, n, 0.5))
    return A, B, P @ B


def test_frequency_criteria_match_lmi_randomized():
    """The frequency criteria hold exactly when the LMI solver finds P (clear-margin cases)."""
    rng = np.random.default_rng(21)
    checked = 0
    for trial in range(16):
        n = 2 + trial % 2
        A, B, v = random_spr_plant(rng, n)
        sk = sup_K_bound(A, B, v, 0.5, GRID).value
        for frac in (0.5, 0.9, 3.0, 10.0):
            kappa = frac * sk
            crit = check_criteria_43_44(A, B, v, kappa, GRID)
            margin = min(crit.f_min, crit.limit)
            if abs(margin) < 1e-3:
                continue
            try:
                find_P_lmi(A, B, v, kappa, budget=20_000)
                solved = True
            except InfeasibleError:
                solved = False
            assert solved == crit.holds, (A, B, v, kappa, crit)
            checked += 1
    assert checked >= 20


def test_certificate_chain_and_lift():
    rng = np.random.default_rng(8)
    for _ in range(8):
        A, B, v = random_spr_plant(rng, 2 + int(rng.integers(0, 2)))
        sk = sup_K_bound(A, B, v, 0.75, GRID).value
        for frac in (0.25, 0.6, 0.95):
            sol = find_P_lmi(A, B, v, frac * sk)
            assert sol.lam_max < -1e-8
            found, _ = psi_free_criterion(A, B, v, frac * sk, GRID)
            if found:
                assert check_eigenvalue_lift(sol.Q, v)
