import math

import numpy as np
import pytest

from adaptctl.bounds import StaticLawConfig, beta_inf_bound, ultimate_bound
from adaptctl.errors import SimulationDiverged, ValidationError
from adaptctl.regressors import CallableRegressor, PolynomialRegressor
from adaptctl.simulator import (NoiseSpec, Trajectory, UncertaintyModel, make_noise, simulate,
                                verify_uub)
from adaptctl.system import PILaw, StaticLaw

I2 = np.eye(2)
BETA_41 = PolynomialRegressor.affine([1.0, 0.0], [[0.0, 0.0], [0.0, -1.0]])
W_41 = np.array([1.0, 1.0])


def setup_41(seed=0, cap=0.01):
    return UncertaintyModel(BETA_41, W_41, NoiseSpec(seed=seed, amplitude_bound=cap))


# ---------------------------------------------------------------- noise

def test_noise_pure_sinusoid():
    sig = make_noise(NoiseSpec(amplitude_bound=0.0), 10.0)
    t = np.linspace(0, 10, 1001)
    assert np.allclose(sig(t), 0.05 * np.sin(1.7179 * t), atol=0, rtol=0)


def test_noise_zero():
    sig = make_noise(NoiseSpec.zero(), 5.0)
    assert np.all(sig(np.linspace(0, 5, 101)) == 0.0)


def test_noise_reproducible_and_bounded():
    spec = NoiseSpec(seed=42, amplitude_bound=0.3)
    a, b = make_noise(spec, 20.0), make_noise(spec, 20.0)
    assert np.array_equal(a.holds, b.holds)
    t = np.linspace(0, 20, 20001)
    assert np.array_equal(a(t), b(t))
    assert np.max(np.abs(a(t))) <= spec.eta_star
    assert spec.eta_star == pytest.approx(0.35)
    assert not np.array_equal(make_noise(NoiseSpec(seed=43, amplitude_bound=0.3), 20.0).holds, a.holds)


def test_noise_zero_order_hold():
    spec = NoiseSpec(seed=1, sample_dt=0.5, amplitude_bound=1.0, sinusoids=())
    sig = make_noise(spec, 3.0)
    assert sig(0.1) == sig(0.49) == sig.holds[0]
    assert sig(0.5) == sig.holds[1]


def test_noise_validation():
    with pytest.raises(ValidationError):
        NoiseSpec(sample_dt=0.0)


# ---------------------------------------------------------------- simulate

def test_equilibrium(example_system, example_cert):
    unc = UncertaintyModel(BETA_41, np.zeros(2))
    tr = simulate(example_system, example_cert, unc, StaticLaw(5 * I2), [0.0, 0.0], t_final=5.0)
    assert np.all(tr.e == 0.0) and np.all(tr.W_hat == 0.0)


def test_static_identity_exact(example_system, example_cert):
    law = StaticLaw(np.array([[3.0, 0.5], [0.5, 2.0]]))
    tr = simulate(example_system, example_cert, setup_41(), law, [0.3, -1.0], t_final=10.0)
    q = BETA_41.batch(tr.e) * (tr.e @ example_cert.v)[:, None]
    assert np.array_equal(tr.q, q)
    assert np.array_equal(tr.W_hat, q @ law.K.T)
    assert tr.z is None


def test_static_equals_pi_at_inverse_sigma(example_system, example_cert):
    unc = setup_41(seed=3)
    st = simulate(example_system, example_cert, unc, StaticLaw(5 * I2), [0.0, 1.0], t_final=50.0)
    pi = simulate(example_system, example_cert, unc, PILaw(5 * I2, 2 * I2, 0.2 * I2), [0.0, 1.0],
                  t_final=50.0)
    assert np.max(np.abs(st.e - pi.e)) < 1e-6
    assert np.max(np.abs(st.W_hat - pi.W_hat)) < 1e-6


def test_pi_internal_state_decays(example_system, example_cert):
    law = PILaw(5 * I2, 2 * I2, 0.2 * I2)
    z0 = np.array([0.7, -0.4])
    tr = simulate(example_system, example_cert, setup_41(), law, [0.5, 0.0], z0=z0, t_final=20.0)
    rate = 0.4  # lambda_min(Gamma Sigma)
    bound = np.linalg.norm(z0) * np.exp(-rate * tr.times) * (1 + 1e-9)
    assert np.all(np.linalg.norm(tr.z, axis=1) <= bound + 1e-15)


def test_pi_parameter_range_error():
    with pytest.raises(ValidationError, match="K < 4 Sigma"):
        PILaw(25 * I2, 2 * I2, 0.2 * I2)
    with pytest.raises(ValidationError, match="positive definite"):
        PILaw(I2, -I2, 0.2 * I2)
    with pytest.raises(ValidationError):
        StaticLaw(np.zeros((2, 2)))


def test_settles_below_bound(example_system, example_cert):
    law = StaticLaw(5 * I2)
    unc = setup_41(seed=9)
    tr = simulate(example_system, example_cert, unc, law, [0.0, 5.0], t_final=100.0)
    b = beta_inf_bound(BETA_41, law.K)
    r = ultimate_bound(example_cert, StaticLawConfig(law.K, 1.0, b), W_41, unc.eta.eta_star).residual
    rep = verify_uub(tr, r)
    assert rep.inside and rep.entry_time is not None


def test_divergence_reports_time(example_system, example_cert):
    H = np.zeros((1, 2, 2))
    H[0, 0, 0] = 1.0
    beta = PolynomialRegressor(np.zeros(1), np.zeros((1, 2)), H)
    unc = UncertaintyModel(beta, [50.0])
    with pytest.raises(SimulationDiverged) as info:
        simulate(example_system, example_cert, unc, StaticLaw(1e-30 * np.eye(1)), [3.0, 3.0],
                 t_final=20.0, dt=1e-3)
    assert 0 < info.value.time < 20.0


def test_python_stepper_matches_compiled(example_system, example_cert):
    unc = setup_41(seed=5)
    law = PILaw(2.5 * I2, 2 * I2, 0.2 * I2)
    a = simulate(example_system, example_cert, unc, law, [0.1, 1.0], t_final=5.0)
    b = simulate(example_system, example_cert, unc, law, [0.1, 1.0], t_final=5.0, use_compiled=False)
    assert np.allclose(a.e, b.e, atol=1e-13, rtol=0)


def test_callable_regressor_path(example_system, example_cert):
    beta = CallableRegressor(lambda e: np.array([1.0, -e[1]]), 2)
    unc = UncertaintyModel(beta, W_41, NoiseSpec(seed=2))
    a = simulate(example_system, example_cert, unc, StaticLaw(5 * I2), [0.0, 1.0], t_final=3.0)
    b = simulate(example_system, example_cert, setup_41(seed=2), StaticLaw(5 * I2), [0.0, 1.0], t_final=3.0)
    assert np.allclose(a.e, b.e, atol=1e-12)


def test_step_halving_order(example_system, example_cert):
    unc = UncertaintyModel(BETA_41, W_41, NoiseSpec(amplitude_bound=0.0))
    law = PILaw(2.5 * I2, 2 * I2, 0.2 * I2)
    finals = [simulate(example_system, example_cert, unc, law, [0.0, 1.0], t_final=4.0, dt=dt).e[-1]
              for dt in (0.04, 0.02, 0.01)]
    d1 = np.linalg.norm(finals[0] - finals[1])
    d2 = np.linalg.norm(finals[1] - finals[2])
    assert math.log2(d1 / d2) >= 3.5


def test_trajectory_immutable_and_uniform(example_system, example_cert):
    tr = simulate(example_system, example_cert, setup_41(), StaticLaw(I2), [0.0, 1.0], t_final=1.0, dt=0.01)
    assert tr.times.size == 101 and tr.dt == pytest.approx(0.01)
    assert np.allclose(np.diff(tr.times), 0.01)
    with pytest.raises(ValueError):
        tr.e[0, 0] = 1.0


def test_csv_format(example_system, example_cert, tmp_path):
    tr = simulate(example_system, example_cert, setup_41(), PILaw(I2, I2, I2), [0.0, 1.0], t_final=0.1, dt=0.01)
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,e1,e2,What1,What2,u,q1,q2,z1,z2"
    assert len(lines) == 12
    row = np.array([float(x) for x in lines[5].split(",")])
    names, data = tr.columns()
    assert np.array_equal(row, data[4])  # 17 significant digits round-trip exactly


def test_input_validation(example_system, example_cert):
    with pytest.raises(ValidationError):
        simulate(example_system, example_cert, setup_41(), StaticLaw(I2), [0.0], t_final=1.0)
    with pytest.raises(ValidationError):
        simulate(example_system, example_cert, setup_41(), StaticLaw(I2), [0.0, 0.0], dt=0.0)
    with pytest.raises(ValidationError):
        simulate(example_system, example_cert, setup_41(), StaticLaw(np.eye(3)), [0.0, 0.0])


# ---------------------------------------------------------------- verify_uub

def make_traj(norms):
    t = np.arange(len(norms), dtype=float)
    e = np.column_stack([norms, np.zeros(len(norms))])
    z = np.zeros((len(norms), 1))
    return Trajectory(t, e, z, np.zeros(len(norms)), z, None, "static")


def test_uub_zero_trajectory():
    rep = verify_uub(make_traj(np.zeros(10)), 1e-3)
    assert rep.inside and rep.entry_time == 0.0 and rep.tail_max == 0.0


def test_uub_spike_not_permanent():
    norms = np.r_[np.linspace(5, 0.1, 50), np.full(45, 0.1), 3.0, np.full(4, 0.1)]
    rep = verify_uub(make_traj(norms), 1.0)
    assert not rep.inside
    assert rep.entry_time == 96.0


def test_uub_never_enters():
    rep = verify_uub(make_traj(np.full(10, 2.0)), 1.0)
    assert rep.entry_time is None and not rep.inside


def test_tail_decreases_with_alpha(example_system, example_cert):
    unc = setup_41(seed=1)
    tails = []
    for alpha in (1.0, 10.0):
        tr = simulate(example_system, example_cert, unc, StaticLaw(alpha * I2), [0.0, 1.0], t_final=100.0)
        tails.append(verify_uub(tr, 1.0).tail_max)
    assert tails[1] < tails[0]
