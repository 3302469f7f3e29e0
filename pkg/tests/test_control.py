"""Optimizer correctness: exact gradients, constraints, convergence."""

import numpy as np
import pytest

from noblemem import (
    ControlSchedule,
    ControlVector,
    Envelope,
    NonConvergence,
    PhysicalParams,
    exponential_input,
    gradient_adjoint,
    gradient_ascent,
    initial_controls,
    objective,
    optimize_cell,
    propagate_reduced,
    simulate_storage,
    storage_grid,
)


def _cell_params(gamma_s=1.0, exchange_j=5.0):
    return PhysicalParams(gamma_p=1.0, gamma_s=gamma_s, gamma_k=0.0,
                          cooperativity=1e12, exchange_j=exchange_j)


def _random_vector(rng, n=64, gamma_s=1.0, exchange_j=5.0, big_t=1.0):
    times = np.linspace(-2.0 * big_t, 1.5 * big_t, n)
    return ControlVector(
        times,
        rng.uniform(-3, 3, n) / np.sqrt(big_t),
        rng.uniform(-3, 3, n) / np.sqrt(big_t),
        rng.uniform(-2, 2, n) / big_t,
        rng.uniform(-2, 2, n) / big_t,
        omega_max=1e3, delta_max=np.inf,
    )


def test_objective_is_a_probability():
    rng = np.random.default_rng(0)
    p = _cell_params()
    env = exponential_input(1.0, 1.0, 1.0 / 128.0)
    for _ in range(10):
        cv = _random_vector(rng)
        eta = objective(cv, p, env)
        assert 0.0 <= eta <= 1.0


def test_gradient_matches_directional_finite_difference():
    rng = np.random.default_rng(5)
    p = _cell_params()
    env = exponential_input(1.0, 1.0, 1.0 / 128.0)
    for _ in range(5):
        cv = _random_vector(rng)
        g = gradient_adjoint(cv, p, env)
        d = rng.normal(size=g.shape)
        eps = 1e-6
        m = cv.as_matrix()
        f_plus = objective(cv.with_matrix(m + eps * d), p, env)
        f_minus = objective(cv.with_matrix(m - eps * d), p, env)
        fd = (f_plus - f_minus) / (2 * eps)
        assert fd == pytest.approx(float(np.sum(g * d)), rel=1e-6, abs=1e-12)


def test_gradient_respects_frozen_channels():
    rng = np.random.default_rng(9)
    p = _cell_params()
    env = exponential_input(1.0, 1.0, 1.0 / 128.0)
    cv = _random_vector(rng)
    frozen = ControlVector(
        cv.times, cv.omega_re, cv.omega_im, cv.delta_s, cv.delta,
        omega_max=cv.omega_max, delta_max=cv.delta_max,
        mask=("omega_re", "omega_im"),
    )
    g = gradient_adjoint(frozen, p, env)
    assert np.all(g[:, 2] == 0.0)
    assert np.all(g[:, 3] == 0.0)
    assert np.any(g[:, 0] != 0.0)


def test_discrete_objective_tracks_continuous_model():
    # constant controls: the optimizer's exponential integrator and the
    # RK4 reduced model must agree on the storage efficiency
    big_t, j = 1.0, 3.0
    p = _cell_params(gamma_s=0.5, exchange_j=j)
    n = 513
    times = np.linspace(-2 * big_t, big_t, n)
    omega = np.full(n, 1.2)
    cv = ControlVector(times, omega, np.zeros(n), np.zeros(n), np.zeros(n))
    env = exponential_input(big_t, 1.0, 3.0 * big_t / (n - 1))
    eta_opt = objective(cv, p, env)
    gauge = PhysicalParams(gamma_p=1.0 / (1.0 + 1e12), gamma_s=0.5,
                           gamma_k=0.0, cooperativity=1e12, exchange_j=j)
    sched = ControlSchedule(env.t0, env.dt, omega.astype(complex),
                            np.zeros(n), np.zeros(n))
    tr = propagate_reduced(gauge, sched, env)
    eta_ode = abs(tr.k[-1]) ** 2
    assert eta_opt == pytest.approx(eta_ode, abs=2e-4)


def test_control_vector_projection_enforces_bounds():
    n = 8
    cv = ControlVector(np.arange(n, dtype=float), np.zeros(n), np.zeros(n),
                       np.zeros(n), np.zeros(n), omega_max=2.0, delta_max=1.0)
    m = np.column_stack([np.full(n, 3.0), np.full(n, 4.0),
                         np.full(n, 5.0), np.full(n, -5.0)])
    out = cv.project(m)
    assert np.allclose(np.hypot(out[:, 0], out[:, 1]), 2.0)
    assert np.all(np.abs(out[:, 2:]) <= 1.0)


def test_storage_grid_has_window_and_swap_tail():
    t = storage_grid(-2.0, 1.0, exchange_j=5.0, n_window=32, n_tail=16)
    assert len(t) == 48
    assert t[0] == -2.0
    assert t[31] == 1.0
    assert t[-1] == pytest.approx(1.0 + 1.5 * np.pi / 10.0)
    assert np.all(np.diff(t) > 0)


def test_initial_controls_encode_the_two_schemes():
    p = _cell_params(exchange_j=10.0)
    env = exponential_input(0.1, 1.0, 0.1 / 128.0)
    seq = initial_controls("sequential", p, env, n_window=64, n_tail=32)
    adi = initial_controls("adiabatic", p, env, n_window=64, n_tail=32)
    in_window = seq.times <= env.t_end + 1e-15
    # sequential: decoupled during the pulse, resonant swap after it
    assert np.all(seq.delta[in_window] > 0)
    swap = (~in_window) & (seq.times <= env.t_end + np.pi / 20.0)
    assert np.all(seq.delta[swap] == 0)
    # adiabatic: resonant during the pulse
    assert np.all(adi.delta[in_window] == 0)
    assert np.all(adi.omega_re[in_window] > 0)


def test_gradient_ascent_improves_and_is_monotone():
    p = _cell_params(gamma_s=1.0, exchange_j=10.0)
    env = exponential_input(1.0, 1.0, 1.0 / 128.0)
    init = initial_controls("adiabatic", p, env, n_window=96, n_tail=32)
    res = gradient_ascent(init, p, env, max_iter=25, raise_on_budget=False)
    etas = [eta for _, eta in res.history]
    assert etas[-1] > etas[0]
    assert all(b > a for a, b in zip(etas, etas[1:]))
    assert res.eta_inf == pytest.approx(etas[-1])
    assert res.eta_inf <= 1.0


def test_gradient_ascent_raises_on_exhausted_budget():
    p = _cell_params(gamma_s=1.0, exchange_j=10.0)
    env = exponential_input(1.0, 1.0, 1.0 / 128.0)
    init = initial_controls("adiabatic", p, env, n_window=96, n_tail=32)
    with pytest.raises(NonConvergence) as exc:
        gradient_ascent(init, p, env, max_iter=2)
    assert exc.value.result.iterations == 2


def test_optimize_cell_beats_both_analytic_starting_points():
    res = optimize_cell(1.0, 10.0, max_iter=60)
    assert res.eta_inf > 0.95
    assert res.classification in ("sequential", "adiabatic", "mixed")


def test_classification_distinguishes_regimes():
    # strong coupling, short pulse: alkali holds the excitation at the
    # pulse end -> sequential; long pulse -> adiabatic
    seq = optimize_cell(0.01, 100.0, max_iter=40)
    adi = optimize_cell(10.0, 10.0, max_iter=40)
    assert seq.classification == "sequential"
    assert adi.classification == "adiabatic"


def test_simulate_storage_consistent_with_objective():
    p = _cell_params()
    env = exponential_input(0.5, 1.0, 0.5 / 128.0)
    cv = initial_controls("sequential", p, env, n_window=96, n_tail=32)
    _, _, k, eta = simulate_storage(cv, p, env)
    assert eta == pytest.approx(objective(cv, p, env), rel=1e-12)
    # eta is |K|^2 over the photon number on the (resampled) control grid
    assert abs(k[-1]) ** 2 == pytest.approx(eta, rel=0.05)
