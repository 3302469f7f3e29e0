"""Input/output field envelopes: builders, quadrature and mode metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, ResolutionError
from .model import Envelope

__all__ = [
    "PulseSpec",
    "exponential_input",
    "photon_number",
    "mode_overlap",
    "time_reverse",
]


@dataclass(frozen=True)
class PulseSpec:
    """Declarative description of an input pulse."""

    shape: str  # "exponential_rising" or "custom"
    duration_T: float
    photons: float
    window: tuple

    def __post_init__(self):
        if self.shape not in ("exponential_rising", "custom"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if not self.duration_T > 0:
            raise ValueError("duration_T must be positive")
        if not self.photons > 0:
            raise ValueError("photons must be positive")

    @classmethod
    def exponential(cls, T: float, photons: float = 1.0) -> "PulseSpec":
        return cls("exponential_rising", T, photons, (-2.0 * T, T))


def exponential_input(T: float, photons: float, dt: float) -> Envelope:
    """Rising-exponential test pulse on t in [-2T, T].

    The intensity profile is A*sqrt(2/T)*exp((t-T)/T) with A chosen so the
    envelope carries exactly ``photons`` under trapezoidal quadrature; the
    amplitude is the positive square root (zero phase).
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if not photons > 0:
        raise ValueError("photons must be positive")
    if dt > T / 100:
        raise ResolutionError(
            f"dt = {dt:.3g} too coarse for pulse time constant T = {T:.3g}; "
            "need dt <= T/100"
        )
    n = int(round(3.0 * T / dt)) + 1
    t = -2.0 * T + dt * np.arange(n)
    # closed-form normalization: int_{-2T}^{T} sqrt(2/T) e^{(t-T)/T} dt
    #                            = sqrt(2T) (1 - e^{-3})
    amp = photons / (math.sqrt(2.0 * T) * (1.0 - math.exp(-3.0)))
    intensity = amp * math.sqrt(2.0 / T) * np.exp((t - T) / T)
    samples = np.sqrt(intensity).astype(np.complex128)
    env = Envelope(-2.0 * T, dt, samples)
    # trapezoid quadrature of the truncated exponential differs from the
    # exact integral at O(dt^2); rescale so photon_number is exact
    n_num = photon_number(env)
    return Envelope(-2.0 * T, dt, samples * math.sqrt(photons / n_num))


def photon_number(env: Envelope) -> float:
    """Total photon number: trapezoidal integral of |e(t)|^2."""
    return float(np.trapezoid(np.abs(env.samples) ** 2, dx=env.dt))


def mode_overlap(a: Envelope, b: Envelope) -> complex:
    """Sesquilinear overlap integral of two envelopes on one grid."""
    if not a.same_grid(b):
        raise GridMismatch("envelopes do not share a time grid")
    return complex(np.trapezoid(np.conj(a.samples) * b.samples, dx=a.dt))


def time_reverse(env: Envelope) -> Envelope:
    """Reverse an envelope about its window midpoint and conjugate it."""
    return Envelope(env.t0, env.dt, np.conj(env.samples[::-1]))
