"""Pulse construction and overlap-integral properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noblemem import (
    Envelope,
    GridMismatch,
    PulseSpec,
    ResolutionError,
    exponential_input,
    mode_overlap,
    photon_number,
    time_reverse,
)


def test_pulse_spec_exponential_window():
    spec = PulseSpec.exponential(2.0, 0.5)
    assert spec.window == (-4.0, 2.0)
    assert spec.shape == "exponential_rising"
    with pytest.raises(ValueError):
        PulseSpec("triangle", 1.0, 1.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        PulseSpec.exponential(-1.0)


@given(
    T=st.floats(1e-6, 1e3),
    photons=st.floats(1e-3, 1e3),
    n_per_t=st.integers(120, 800),
)
@settings(max_examples=40, deadline=None)
def test_exponential_input_carries_exact_photon_number(T, photons, n_per_t):
    env = exponential_input(T, photons, T / n_per_t)
    assert photon_number(env) == pytest.approx(photons, rel=1e-12)
    assert env.t0 == pytest.approx(-2.0 * T)
    assert env.t_end == pytest.approx(T, rel=1e-9)
    # rising exponential: intensity increases monotonically, zero phase
    i2 = np.abs(env.samples) ** 2
    assert np.all(np.diff(i2) > 0)
    assert np.all(env.samples.imag == 0)


def test_exponential_input_rejects_coarse_grid():
    with pytest.raises(ResolutionError):
        exponential_input(1.0, 1.0, 0.02)


def _random_envelope(draw, n):
    re = draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n))
    im = draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n))
    return Envelope(0.0, 0.1, np.array(re) + 1j * np.array(im))


@st.composite
def _env_pair(draw):
    n = draw(st.integers(2, 40))
    return _random_envelope(draw, n), _random_envelope(draw, n)


@given(_env_pair())
@settings(max_examples=60, deadline=None)
def test_overlap_cauchy_schwarz(pair):
    a, b = pair
    ov = mode_overlap(a, b)
    # trapezoid weights make this the Cauchy-Schwarz bound of the same
    # quadrature, up to roundoff
    bound = photon_number(a) * photon_number(b)
    assert abs(ov) ** 2 <= bound * (1 + 1e-9) + 1e-12


@given(_env_pair(), st.complex_numbers(max_magnitude=10, allow_nan=False))
@settings(max_examples=40, deadline=None)
def test_overlap_is_sesquilinear(pair, alpha):
    a, b = pair
    scaled = Envelope(b.t0, b.dt, alpha * b.samples)
    lhs = mode_overlap(a, scaled)
    assert lhs == pytest.approx(alpha * mode_overlap(a, b), abs=1e-9)
    conj = mode_overlap(b, a)
    assert conj == pytest.approx(np.conj(mode_overlap(a, b)), abs=1e-12)


@given(_env_pair())
@settings(max_examples=40, deadline=None)
def test_self_overlap_is_photon_number(pair):
    a, _ = pair
    assert mode_overlap(a, a).real == pytest.approx(photon_number(a), abs=1e-12)
    assert abs(mode_overlap(a, a).imag) < 1e-12


@given(_env_pair())
@settings(max_examples=40, deadline=None)
def test_time_reverse_preserves_photon_number_and_involutes(pair):
    a, _ = pair
    r = time_reverse(a)
    assert photon_number(r) == pytest.approx(photon_number(a), abs=1e-12)
    rr = time_reverse(r)
    assert np.array_equal(rr.samples, a.samples)


def test_overlap_rejects_mismatched_grids():
    a = Envelope(0.0, 0.1, np.ones(5, dtype=complex))
    b = Envelope(0.0, 0.2, np.ones(5, dtype=complex))
    with pytest.raises(GridMismatch):
        mode_overlap(a, b)
