import math

import numpy as np
import pytest

from vidsolve.errors import BadNfe, BadRange, EtaTooLarge, ShapeMismatch
from vidsolve.schedule import (
    default_schedule,
    make_linear_schedule,
    renoise,
    subsample_steps,
    tweedie,
)


def cumprod_oracle(betas):
    # independent running product, plain python loop
    out, acc = [], 1.0
    for b in betas:
        acc *= 1.0 - b
        out.append(acc)
    return out


def test_linear_schedule_tables_match_loop_oracle():
    s = make_linear_schedule(1000, 1e-4, 0.02)
    oracle = cumprod_oracle(s.beta)
    assert s.alpha_bar_at(1) == pytest.approx(0.9999, abs=1e-12)
    assert np.allclose(s.alpha_bar, oracle, rtol=1e-12)
    # beta_tilde against its definition, spot-checked at a few indices
    for t in (2, 17, 500, 1000):
        expected = (1 - s.alpha_bar_at(t - 1)) / (1 - s.alpha_bar_at(t)) * s.beta_at(t)
        assert s.beta_tilde_at(t) == pytest.approx(expected, rel=1e-12)


def test_two_step_constant_beta():
    c = 0.3
    s = make_linear_schedule(2, c, c)
    assert s.alpha_bar_at(2) == pytest.approx((1 - c) ** 2, rel=1e-14)


def test_schedule_invariants():
    s = default_schedule()
    assert np.all(np.diff(s.alpha_bar) < 0)
    for table in (s.beta, s.alpha, s.alpha_bar):
        assert np.all(table > 0) and np.all(table <= 1)
    assert np.all(np.diff(s.beta) >= 0)


def test_bad_ranges():
    with pytest.raises(BadRange):
        make_linear_schedule(1000, 0.02, 1e-4)
    with pytest.raises(BadRange):
        make_linear_schedule(1, 1e-4, 0.02)
    with pytest.raises(BadRange):
        make_linear_schedule(10, 0.0, 0.02)


# --- step plans ----------------------------------------------------------------


def test_subsample_full_schedule():
    s = make_linear_schedule(10, 1e-4, 0.02)
    plan = subsample_steps(s, 10)
    assert plan.timesteps == tuple(range(10, 0, -1))


def test_subsample_spacing_oracle():
    s = default_schedule()
    plan = subsample_steps(s, 20)
    assert len(plan.timesteps) == 20
    assert plan.timesteps[0] == 1000
    # independent spacing check
    diffs = {plan.timesteps[i] - plan.timesteps[i + 1] for i in range(19)}
    assert diffs == {50}
    assert min(plan.timesteps) >= 1


def test_subsample_degenerate_and_errors():
    s = default_schedule()
    assert subsample_steps(s, 1).timesteps == (1000,)
    with pytest.raises(BadNfe):
        subsample_steps(s, 0)
    with pytest.raises(BadNfe):
        subsample_steps(s, 1001)


# --- tweedie --------------------------------------------------------------------


def test_tweedie_no_noise_limit():
    x = np.random.default_rng(0).standard_normal((2, 1, 3, 3))
    assert np.array_equal(tweedie(x, np.ones_like(x), 1.0), x)


def test_tweedie_inverts_forward_corruption():
    rng = np.random.default_rng(1)
    x0 = rng.uniform(0, 1, (3, 1, 4, 4))
    eps = rng.standard_normal(x0.shape)
    for abar in (1e-4, 1e-2, 0.5, 0.99, 1.0):
        x_t = math.sqrt(abar) * x0 + math.sqrt(1 - abar) * eps
        rec = tweedie(x_t, eps, abar)
        assert np.allclose(rec, x0, rtol=1e-6, atol=1e-9)


def test_tweedie_closed_form_value():
    # oracle: -(sqrt(1-abar)/sqrt(abar)) * 1 evaluated independently
    expected = -math.sqrt(0.75) / 0.5
    assert expected == pytest.approx(-1.7320508, abs=1e-6)
    out = tweedie(np.zeros((1, 1, 2, 2)), np.ones((1, 1, 2, 2)), 0.25)
    assert np.allclose(out, expected, rtol=1e-12)


def test_tweedie_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        tweedie(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 2, 3)), 0.5)


# --- renoise ---------------------------------------------------------------------


def test_renoise_eta_zero_ignores_stochastic_noise():
    s = default_schedule()
    rng = np.random.default_rng(2)
    xbar = rng.standard_normal((2, 1, 3, 3))
    det = rng.standard_normal(xbar.shape)
    a = renoise(xbar, det, rng.standard_normal(xbar.shape), s, 500, 450, eta=0.0)
    b = renoise(xbar, det, rng.standard_normal(xbar.shape), s, 500, 450, eta=0.0)
    assert np.array_equal(a, b)


def test_renoise_isolates_stochastic_term():
    s = default_schedule()
    sto = np.random.default_rng(3).standard_normal((1, 1, 2, 2))
    zeros = np.zeros_like(sto)
    t, t_prev, eta = 600, 550, 0.7
    out = renoise(zeros, zeros, sto, s, t, t_prev, eta)
    assert np.allclose(out, eta * s.beta_tilde_at(t) * sto, rtol=1e-12)


def test_renoise_coefficient_identity():
    # sum of squared noise coefficients must equal 1 - abar_prev for any valid eta
    s = default_schedule()
    shape = (1, 1, 1, 1)
    one = np.ones(shape)
    zero = np.zeros(shape)
    for t, t_prev in ((1000, 950), (500, 400), (100, 50), (40, 20)):
        for eta in (0.0, 0.15, 0.5, 1.0):
            c_det = float(renoise(zero, one, zero, s, t, t_prev, eta)[0, 0, 0, 0])
            c_sto = float(renoise(zero, zero, one, s, t, t_prev, eta)[0, 0, 0, 0])
            assert c_det**2 + c_sto**2 == pytest.approx(1 - s.alpha_bar_at(t_prev), rel=1e-10)


def test_renoise_eta_too_large():
    s = default_schedule()
    z = np.zeros((1, 1, 1, 1))
    # near t_prev = 1 the remaining variance is ~1e-4; a huge eta overshoots it
    with pytest.raises(EtaTooLarge):
        renoise(z, z, z, s, 2, 1, eta=1000.0)


def test_renoise_shape_mismatch():
    s = default_schedule()
    with pytest.raises(ShapeMismatch):
        renoise(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 2, 3)), s, 500, 450, 0.1)
