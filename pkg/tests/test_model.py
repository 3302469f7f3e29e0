"""Dynamics oracles for the three-mode model and its reduced form."""

import numpy as np
import pytest

from noblemem import (
    ControlSchedule,
    Envelope,
    GridMismatch,
    PhysicalParams,
    StiffnessError,
    exchange_rate_from_microscopic,
    flux_balance,
    output_field,
    propagate_full,
    propagate_reduced,
)


def _zero_input(t0, dt, n):
    return Envelope.zero(t0, dt, n)


def test_params_derived_rates():
    p = PhysicalParams(gamma_p=2.0, gamma_s=0.1, gamma_k=0.0,
                       cooperativity=4.0, exchange_j=1.0)
    assert p.gamma_red == pytest.approx(2.0 * 5.0)
    assert p.out_coupling == pytest.approx(np.sqrt(2.0 * 2.0 * 4.0))


def test_params_warns_when_noble_decays_faster_than_alkali():
    with pytest.warns(UserWarning):
        PhysicalParams(gamma_p=1.0, gamma_s=0.1, gamma_k=1.0,
                       cooperativity=1.0, exchange_j=1.0)


def test_exchange_rate_from_microscopic():
    assert exchange_rate_from_microscopic(2.0, 9.0, 4.0) == pytest.approx(12.0)
    assert exchange_rate_from_microscopic(0.0, 1e20, 1e15) == 0.0
    with pytest.raises(ValueError):
        exchange_rate_from_microscopic(-1.0, 1.0, 1.0)


def test_isolated_spin_decays_analytically():
    # Omega = 0, J = 0: S(t) = exp(-(gamma_s + i*delta_s) t) S(0)
    p = PhysicalParams(gamma_p=5.0, gamma_s=0.3, gamma_k=0.0,
                       cooperativity=1.0, exchange_j=0.0)
    dt, n = 1e-3, 2001
    sched = ControlSchedule.constant(0.0, dt, n, omega=0.0, delta_s=2.0)
    tr = propagate_full(p, sched, _zero_input(0.0, dt, n),
                        init=(0.0, 1.0, 0.0))
    t_end = dt * (n - 1)
    expect = np.exp(-(0.3 + 2.0j) * t_end)
    assert tr.s[-1] == pytest.approx(expect, abs=1e-10)
    assert abs(tr.k[-1]) < 1e-12


def test_resonant_exchange_is_unitary_and_swaps():
    # no relaxation: |S|^2 + |K|^2 conserved; full transfer at t = pi/(2J)
    j = 10.0
    p = PhysicalParams(gamma_p=1.0, gamma_s=0.0, gamma_k=0.0,
                       cooperativity=1.0, exchange_j=j)
    t_swap = np.pi / (2.0 * j)
    n = 4001
    dt = t_swap / (n - 1)
    sched = ControlSchedule.constant(0.0, dt, n)
    tr = propagate_full(p, sched, _zero_input(0.0, dt, n),
                        init=(0.0, 1.0, 0.0))
    norm = np.abs(tr.s) ** 2 + np.abs(tr.k) ** 2
    assert np.max(np.abs(norm - 1.0)) < 1e-10
    assert abs(tr.k[-1]) ** 2 == pytest.approx(1.0, abs=1e-10)
    # the transferred amplitude picks up the -i exchange phase
    assert tr.k[-1] == pytest.approx(-1.0j, abs=1e-8)


def test_cavity_steady_state_and_impedance_matching():
    # constant drive, spins off: P -> i*sqrt(2 gp C) e / gamma_red and
    # e_out -> e (1-C)/(1+C); at C = 1 the cavity absorbs everything
    for c, expected_ratio in ((1.0, 0.0), (3.0, -0.5)):
        p = PhysicalParams(gamma_p=50.0, gamma_s=0.0, gamma_k=0.0,
                           cooperativity=c, exchange_j=0.0)
        dt, n = 2e-4, 3001
        e0 = 0.7 - 0.2j
        env = Envelope(0.0, dt, np.full(n, e0))
        sched = ControlSchedule.constant(0.0, dt, n)
        tr = propagate_full(p, sched, env)
        p_ss = 1j * p.out_coupling * e0 / p.gamma_red
        assert tr.p[-1] == pytest.approx(p_ss, rel=1e-9)
        assert tr.e_out.samples[-1] == pytest.approx(
            e0 * expected_ratio, abs=1e-9 * abs(e0))


def test_output_field_matches_trajectory_series():
    p = PhysicalParams(gamma_p=3.0, gamma_s=0.2, gamma_k=0.0,
                       cooperativity=2.0, exchange_j=1.0)
    dt, n = 1e-3, 501
    rng = np.random.default_rng(3)
    env = Envelope(0.0, dt, rng.normal(size=n) + 1j * rng.normal(size=n))
    sched = ControlSchedule.constant(0.0, dt, n, omega=1.0)
    tr = propagate_full(p, sched, env)
    out = output_field(tr, env, p)
    assert np.allclose(out.samples, tr.e_out.samples)


def _random_run(seed, n=1601, reduced=False):
    rng = np.random.default_rng(seed)
    p = PhysicalParams(
        gamma_p=rng.uniform(0.5, 2.0),
        gamma_s=rng.uniform(0.0, 0.5),
        gamma_k=rng.uniform(0.0, 0.01),
        cooperativity=rng.uniform(0.5, 4.0),
        exchange_j=rng.uniform(0.0, 3.0),
        delta_cav=rng.uniform(-1.0, 1.0),
    )
    duration = 2.0
    dt = duration / (n - 1)
    t = np.linspace(0.0, duration, n)

    def smooth(scale):
        a = rng.normal(size=3) * scale
        ph = rng.uniform(0, 2 * np.pi, size=3)
        w = rng.uniform(0.5, 3.0, size=3)
        return sum(ai * np.cos(wi * t + pi) for ai, wi, pi in zip(a, w, ph))

    omega = smooth(1.5) + 1j * smooth(1.5)
    sched = ControlSchedule(0.0, dt, omega, smooth(2.0), smooth(2.0))
    env = Envelope(0.0, dt, smooth(1.0) + 1j * smooth(1.0))
    prop = propagate_reduced if reduced else propagate_full
    return p, sched, env, prop(p, sched, env)


def test_flux_balance_residual_is_fourth_order_in_step():
    p, sched, env, tr = _random_run(7, n=801)
    r1 = abs(flux_balance(tr, env))
    # halve the step: residual should drop by ~2^4
    n2 = 1601
    t2 = np.linspace(0.0, 2.0, n2)
    t1 = np.linspace(0.0, 2.0, 801)

    def refine(v):
        re = np.interp(t2, t1, np.real(v))
        im = np.interp(t2, t1, np.imag(v))
        return re + 1j * im

    sched2 = ControlSchedule(0.0, t2[1], refine(sched.omega),
                             np.interp(t2, t1, sched.delta_s),
                             np.interp(t2, t1, sched.delta_k))
    env2 = Envelope(0.0, t2[1], refine(env.samples))
    r2 = abs(flux_balance(propagate_full(p, sched2, env2), env2))
    assert r1 / r2 == pytest.approx(16.0, rel=0.25)


def test_flux_balance_small_for_random_runs():
    for seed in range(5):
        p, sched, env, tr = _random_run(seed)
        n_in = tr.photons_in
        assert abs(flux_balance(tr, env)) <= 1e-8 * max(n_in, 1e-6)


def test_reduced_model_tracks_full_model_at_strong_coupling():
    # gamma_p*C*T >> 1: the slaved-dipole trajectory matches the full one
    p = PhysicalParams(gamma_p=2e3, gamma_s=0.2, gamma_k=0.0,
                       cooperativity=50.0, exchange_j=1.0)
    duration, n = 2.0, 2001
    dt = duration / (n - 1)
    t = np.linspace(0, duration, n)
    env = Envelope(0.0, dt, np.sqrt(np.exp(-((t - 0.8) / 0.3) ** 2)))
    omega = np.full(n, 60.0 + 0.0j)
    sched = ControlSchedule(0.0, dt, omega, np.zeros(n), np.zeros(n))
    red = propagate_reduced(p, sched, env)
    full = propagate_full(p, sched, env, substeps=200)
    assert np.max(np.abs(red.s - full.s)) < 2e-3
    assert np.max(np.abs(red.k - full.k)) < 2e-3
    assert red.photons_out == pytest.approx(full.photons_out, abs=2e-3)


def test_stiff_schedule_is_rejected():
    p = PhysicalParams(gamma_p=1.0, gamma_s=0.0, gamma_k=0.0,
                       cooperativity=1.0, exchange_j=1e6)
    sched = ControlSchedule.constant(0.0, 1e-3, 11)
    with pytest.raises(StiffnessError):
        propagate_full(p, sched, _zero_input(0.0, 1e-3, 11))
    with pytest.raises(StiffnessError):
        propagate_reduced(p, sched, _zero_input(0.0, 1e-3, 11))


def test_mismatched_grids_are_rejected():
    p = PhysicalParams(gamma_p=1.0, gamma_s=0.0, gamma_k=0.0,
                       cooperativity=1.0, exchange_j=0.0)
    sched = ControlSchedule.constant(0.0, 1e-3, 11)
    with pytest.raises(GridMismatch):
        propagate_full(p, sched, _zero_input(0.0, 1e-3, 12))
    with pytest.raises(GridMismatch):
        propagate_full(p, sched, _zero_input(0.0, 2e-3, 11))


def test_reduced_warns_outside_adiabatic_regime():
    p = PhysicalParams(gamma_p=1.0, gamma_s=0.0, gamma_k=0.0,
                       cooperativity=1.0, exchange_j=0.0)
    sched = ControlSchedule.constant(0.0, 1e-3, 11)
    with pytest.warns(UserWarning):
        propagate_reduced(p, sched, _zero_input(0.0, 1e-3, 11))
