"""Closed-form rates, storage kernels, matched control shaping and
analytic scheme efficiencies.

Storage of a photon on either collective spin is, in the adiabatic
regimes, a linear map S(T) (or K(T)) = integral of h(t) e_in(t) dt.  The
kernel h encodes the control history; its overlap with the input pulse
gives the storage efficiency without integrating the equations of motion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRates, InvalidRegime, NotNormalized, Unreachable
from .model import ControlSchedule, Envelope, PhysicalParams
from .pulses import exponential_input, photon_number

__all__ = [
    "KernelSeries",
    "ALKALI_STORAGE",
    "NOBLE_STORAGE",
    "control_stimulated_rate",
    "exchange_stimulated_rate",
    "build_kernel",
    "kernel_efficiency",
    "shape_control_matched",
    "swap_transfer_efficiency",
    "decoupled_relaxation",
    "analytic_efficiency",
    "matched_efficiency",
]

ALKALI_STORAGE = "alkali_storage"
NOBLE_STORAGE = "noble_storage"
_KINDS = (ALKALI_STORAGE, NOBLE_STORAGE)


@dataclass(frozen=True)
class KernelSeries:
    """Storage kernel h(t) sampled on a uniform grid."""

    t0: float
    dt: float
    h: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        h = np.asarray(self.h, dtype=np.complex128).copy()
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        norm = float(np.trapezoid(np.abs(h) ** 2, dx=self.dt))
        if norm > 1.0 + 1e-6:
            raise ValueError(
                f"kernel norm {norm:.8f} exceeds the unit-efficiency bound"
            )

    def norm_squared(self) -> float:
        return float(np.trapezoid(np.abs(self.h) ** 2, dx=self.dt))


def control_stimulated_rate(omega, params: PhysicalParams):
    """Control-stimulated alkali pumping rate |Omega|^2 / [gamma_p (C+1)]."""
    return np.abs(omega) ** 2 / (params.gamma_p * (params.cooperativity + 1.0))


def exchange_stimulated_rate(params: PhysicalParams, gamma_omega):
    """Exchange-stimulated noble-gas pumping rate J^2 / (gamma_omega + gamma_s)."""
    denom = np.asarray(gamma_omega, dtype=float) + params.gamma_s
    if params.exchange_j == 0.0:
        return np.zeros_like(denom) if denom.ndim else 0.0
    if np.any(denom <= 0.0):
        raise DegenerateRates(
            "gamma_omega + gamma_s must be positive when the exchange "
            "coupling is nonzero"
        )
    out = params.exchange_j**2 / denom
    return out if out.ndim else float(out)


def _tail_cumtrapz(f: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoidal integral from t to the end of the grid."""
    seg = 0.5 * dt * (f[:-1] + f[1:])
    out = np.zeros(len(f), dtype=f.dtype)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


def build_kernel(kind: str, schedule: ControlSchedule, params: PhysicalParams) -> KernelSeries:
    """Evaluate the storage kernel for a sampled control schedule.

    Uses the nonsingular coupling amplitude
    a = -sqrt(2*gamma_p*C) * conj(Omega) / [gamma_p*(C+1)], finite at
    Omega = 0.  The noble-gas kernel additionally assumes resonant
    exchange (delta = 0) and a strongly slaved alkali spin.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}")
    dt = schedule.dt
    omega = np.asarray(schedule.omega)
    g_om = control_stimulated_rate(omega, params)
    a_alk = -params.out_coupling * np.conj(omega) / params.gamma_red

    if kind == ALKALI_STORAGE:
        decay = _tail_cumtrapz(params.gamma_s + g_om, dt)
        h = a_alk * np.exp(-decay)
        return KernelSeries(schedule.t0, dt, h, kind)

    if np.max(np.abs(schedule.delta)) > 1e-12 * max(params.exchange_j, 1.0):
        warnings.warn(
            "noble-gas storage kernel assumes resonant exchange (delta = 0); "
            "the schedule carries a nonzero mismatch",
            stacklevel=2,
        )
    if params.exchange_j > 0 and np.mean(g_om) < 3.0 * params.exchange_j:
        warnings.warn(
            "noble-gas storage kernel assumes the stimulated rate dominates "
            "the exchange coupling (gamma_omega >> J)",
            stacklevel=2,
        )
    g_j = exchange_stimulated_rate(params, g_om)
    # a_noble = i * a_alk * gamma_J / J written without dividing by J
    a_nob = 1j * a_alk * params.exchange_j / (g_om + params.gamma_s)
    decay = _tail_cumtrapz(params.gamma_k + np.asarray(g_j, dtype=float), dt)
    h = a_nob * np.exp(-decay)
    return KernelSeries(schedule.t0, dt, h, kind)


def kernel_efficiency(kernel: KernelSeries, input: Envelope) -> float:
    """Storage efficiency |integral h(t) e_in(t) dt|^2 for a 1-photon input."""
    n = photon_number(input)
    if abs(n - 1.0) > 1e-6:
        raise NotNormalized(f"input carries {n:.8f} photons, expected 1")
    if len(kernel.h) != len(input) or abs(kernel.dt - input.dt) > 1e-9 * input.dt:
        raise ValueError("kernel and input envelope grids differ")
    amp = np.trapezoid(kernel.h * np.asarray(input.samples), dx=input.dt)
    return float(abs(amp) ** 2)


def _solve_kernel_envelope(
    decay_rate: float, source: np.ndarray, dt: float, g_floor: float
):
    """Backward-solve G' = decay_rate*G + mu*source with G(T)=1, G(t0)=g_floor.

    G(t) is the squared kernel envelope exp(-2*integral of the total decay
    from t to T).  The equation is linear in the matching gain mu, so the
    homogeneous and particular solutions are integrated separately (exact
    per-step exponential recurrence, trapezoidal source) and mu is fixed by
    the boundary value at the window start.  Returns (G, mu).
    """
    n = len(source)
    eh = math.exp(-decay_rate * dt)
    g_hom = np.empty(n)
    g_par = np.empty(n)
    g_hom[-1] = 1.0
    g_par[-1] = 0.0
    # per-interval trapezoid of e^{decay_rate*(t_{i+1}-t')} * source(t')
    w_left = 0.5 * dt * math.exp(decay_rate * dt)
    w_right = 0.5 * dt
    for i in range(n - 2, -1, -1):
        quad = w_left * source[i] + w_right * source[i + 1]
        g_hom[i] = eh * g_hom[i + 1]
        g_par[i] = eh * (g_par[i + 1] - quad)
    if g_par[0] >= 0:
        raise Unreachable(
            "matching source integral is degenerate (no pulse energy)",
            interval=(0.0, 0.0),
        )
    mu = (g_floor - g_hom[0]) / g_par[0]
    if mu <= 0:
        raise Unreachable(
            "kernel matching demands a negative stimulated rate over the "
            "whole window (decay too strong for the requested pulse)",
        )
    g = g_hom + mu * g_par
    return g, float(mu)


def shape_control_matched(
    input: Envelope,
    params: PhysicalParams,
    kind: str,
    g_floor: float = 1e-3,
    n_iter: int = 4,
) -> ControlSchedule:
    """Shape Omega(t) so the storage kernel follows the input pulse.

    Returns a resonant schedule (both detunings zero) with real
    non-negative Omega(t) whose kernel satisfies |h(t)|^2 = mu |e_in(t)|^2
    on the pulse window.  The matching gain mu equals the achievable
    storage efficiency.  ``g_floor`` regularizes the kernel envelope at the
    window start, where exact matching would demand a diverging (alkali)
    or vanishing (noble-gas) stimulated rate; the efficiency cost is of
    order g_floor.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}")
    n_ph = photon_number(input)
    if abs(n_ph - 1.0) > 1e-6:
        raise NotNormalized(f"input carries {n_ph:.8f} photons, expected 1")
    if not 0 < g_floor < 1:
        raise ValueError("g_floor must lie in (0, 1)")

    dt = input.dt
    e2 = np.abs(np.asarray(input.samples)) ** 2
    c = params.cooperativity
    w = c / (c + 1.0)
    t = input.times()

    if kind == ALKALI_STORAGE:
        # |h|^2 = 2*gamma_omega*w*G with G' = 2*gamma_s*G + mu*|e|^2/w
        g, mu = _solve_kernel_envelope(2.0 * params.gamma_s, e2 / w, dt, g_floor)
        gamma_om = mu * e2 / (2.0 * w * g)
    else:
        # |h|^2 = 2*gamma_J*beta*w*G, beta = gamma_omega/(gamma_omega+gamma_s),
        # G' = 2*gamma_k*G + mu*|e|^2/(w*beta); iterate on beta
        j = params.exchange_j
        if j <= 0:
            raise InvalidRegime("noble-gas matching requires exchange_j > 0")
        beta = np.ones_like(e2)
        gamma_om = None
        for _ in range(max(1, n_iter)):
            g, mu = _solve_kernel_envelope(
                2.0 * params.gamma_k, e2 / (w * beta), dt, g_floor
            )
            gamma_j = mu * e2 / (2.0 * w * beta * g)
            with np.errstate(divide="ignore"):
                gamma_om = np.where(gamma_j > 0, j**2 / gamma_j, np.inf) - params.gamma_s
            if np.any(gamma_om < 0):
                bad = np.flatnonzero(gamma_om < 0)
                raise Unreachable(
                    "matching demands a negative control-stimulated rate; "
                    "increase g_floor or shorten the pulse",
                    interval=(float(t[bad[0]]), float(t[bad[-1]])),
                )
            gamma_om = np.where(np.isfinite(gamma_om), gamma_om, 0.0)
            beta = np.where(
                gamma_om + params.gamma_s > 0,
                gamma_om / (gamma_om + params.gamma_s),
                1.0,
            )

    omega = np.sqrt(np.maximum(gamma_om, 0.0) * params.gamma_red)
    return ControlSchedule(
        input.t0, dt, omega.astype(np.complex128),
        np.zeros(len(omega)), np.zeros(len(omega)),
    )


def swap_transfer_efficiency(params: PhysicalParams) -> float:
    """Intensity transfer of the resonant pi/(2J) exchange stage."""
    if params.exchange_j <= 0:
        raise ValueError("exchange_j must be positive for a swap stage")
    if params.gamma_s > 0.25 * params.exchange_j:
        warnings.warn(
            "swap transfer formula extrapolated outside its J >> gamma_s "
            "validity regime",
            stacklevel=2,
        )
    return math.exp(-math.pi * params.gamma_s / (2.0 * params.exchange_j))


def decoupled_relaxation(params: PhysicalParams, delta: float) -> float:
    """Effective noble-gas decay rate when detuned from the alkali spin."""
    if params.gamma_s == 0.0:
        return params.gamma_k
    induced = params.exchange_j**2 * params.gamma_s / (params.gamma_s**2 + delta**2)
    return induced + params.gamma_k


SEQUENTIAL = "sequential"
ADIABATIC = "adiabatic"


def analytic_efficiency(scheme: str, params: PhysicalParams, T: float) -> float:
    """Closed-prescription storage efficiency eta_inf for one scheme.

    Evaluates the kernel overlap with the rising-exponential test pulse
    under the fixed-rate prescriptions (sequential: gamma_omega = 1/T -
    gamma_s followed by the resonant swap; adiabatic: gamma_omega = T*J^2
    - gamma_s, i.e. gamma_J = 1/T), at the ideal-cavity normalization.
    Callers multiply by C/(C+1) for finite cooperativity.
    """
    if scheme == SEQUENTIAL:
        gamma_om = 1.0 / T - params.gamma_s
    elif scheme == ADIABATIC:
        gamma_om = T * params.exchange_j**2 - params.gamma_s
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if gamma_om <= 0:
        raise InvalidRegime(
            f"{scheme} prescription gives non-positive stimulated rate "
            f"{gamma_om:.3g} at T = {T:.3g}"
        )

    big_c = 1e12
    p_inf = PhysicalParams(
        gamma_p=1.0 / (1.0 + big_c),
        gamma_s=params.gamma_s,
        gamma_k=params.gamma_k,
        cooperativity=big_c,
        exchange_j=params.exchange_j,
    )  # gamma_red = 1 in this gauge
    env = exponential_input(T, 1.0, T / 1000.0)
    omega = math.sqrt(gamma_om * p_inf.gamma_red)
    sched = ControlSchedule.constant(env.t0, env.dt, len(env), omega=omega)

    if scheme == SEQUENTIAL:
        kern = build_kernel(ALKALI_STORAGE, sched, p_inf)
        return kernel_efficiency(kern, env) * swap_transfer_efficiency(params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        kern = build_kernel(NOBLE_STORAGE, sched, p_inf)
    return kernel_efficiency(kern, env)


def matched_efficiency(scheme: str, params: PhysicalParams, T: float) -> float:
    """Kernel-matched storage efficiency eta_inf for one scheme.

    Like :func:`analytic_efficiency` but with the control shaped by
    :func:`shape_control_matched` instead of held at the fixed-rate
    prescription; still a closed-form (optimizer-free) prediction, at
    the ideal-cavity normalization.
    """
    if scheme == SEQUENTIAL:
        kind = ALKALI_STORAGE
    elif scheme == ADIABATIC:
        kind = NOBLE_STORAGE
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    big_c = 1e12
    p_inf = PhysicalParams(
        gamma_p=1.0 / (1.0 + big_c),
        gamma_s=params.gamma_s,
        gamma_k=params.gamma_k,
        cooperativity=big_c,
        exchange_j=params.exchange_j,
    )
    env = exponential_input(T, 1.0, T / 1000.0)
    sched = None
    for g_floor in (1e-3, 1e-2, 1e-1):
        try:
            sched = shape_control_matched(env, p_inf, kind, g_floor=g_floor)
            break
        except Unreachable:
            continue
    if sched is None:
        raise InvalidRegime(
            f"matched shaping unreachable for {scheme} at T = {T:.3g}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        kern = build_kernel(kind, sched, p_inf)
    eta = kernel_efficiency(kern, env)
    if scheme == SEQUENTIAL:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eta *= swap_transfer_efficiency(params)
    return eta
