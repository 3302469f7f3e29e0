"""Physical data model and deterministic three-mode propagators.

The memory is described by three coupled complex mode amplitudes: the
optical dipole P of the alkali ensemble, the collective alkali spin S and
the collective noble-gas spin K.  A cavity input field e_in drives P, a
classical control with Rabi frequency Omega couples P and S, and a fixed
collisional exchange rate J couples S and K.  Because the equations of
motion are linear, single-excitation expectation values evolve as plain
c-numbers and every efficiency is a ratio of quadratic observables.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, StiffnessError

__all__ = [
    "PhysicalParams",
    "Envelope",
    "ControlSchedule",
    "Trajectory",
    "exchange_rate_from_microscopic",
    "rhs_full",
    "propagate_full",
    "propagate_reduced",
    "output_field",
    "flux_balance",
]

_GRID_RTOL = 1e-9


@dataclass(frozen=True)
class PhysicalParams:
    """Rate and coupling constants defining one memory system.

    All rates are angular rates in 1/s.  ``cooperativity`` may be large
    (e.g. 1e12) to emulate the ideal-cavity limit.
    """

    gamma_p: float
    gamma_s: float
    gamma_k: float
    cooperativity: float
    exchange_j: float
    delta_cav: float = 0.0

    def __post_init__(self):
        if not self.gamma_p > 0:
            raise ValueError("gamma_p must be positive")
        for name in ("gamma_s", "gamma_k", "cooperativity", "exchange_j"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.gamma_k > self.gamma_s:
            warnings.warn(
                "gamma_k exceeds gamma_s; the model targets the regime of a "
                "noble-gas spin living much longer than the alkali spin",
                stacklevel=2,
            )

    @property
    def gamma_red(self) -> float:
        """Total optical-dipole decay rate gamma_p * (1 + C)."""
        return self.gamma_p * (1.0 + self.cooperativity)

    @property
    def out_coupling(self) -> float:
        """Field-dipole coupling sqrt(2 * gamma_p * C)."""
        return math.sqrt(2.0 * self.gamma_p * self.cooperativity)


def _as_complex_array(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.complex128).copy()
    arr.setflags(write=False)
    return arr


def _as_float_array(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Envelope:
    """Complex field amplitude samples (units 1/sqrt(s)) on a uniform grid."""

    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "samples", _as_complex_array(self.samples))
        if not np.all(np.isfinite(self.samples.view(np.float64))):
            raise ValueError("envelope samples must be finite")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self.samples) - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    def same_grid(self, other) -> bool:
        scale = max(abs(self.t0), abs(self.dt), 1e-300)
        return (
            len(self) == len(other)
            and abs(self.t0 - other.t0) <= _GRID_RTOL * scale
            and abs(self.dt - other.dt) <= _GRID_RTOL * self.dt
        )

    @classmethod
    def zero(cls, t0: float, dt: float, n: int) -> "Envelope":
        return cls(t0, dt, np.zeros(n, dtype=np.complex128))


@dataclass(frozen=True)
class ControlSchedule:
    """Sampled control waveforms on a uniform grid.

    ``omega`` is the (complex) control Rabi frequency, ``delta_s`` the
    two-photon detuning of the alkali spin and ``delta_k`` the overall
    detuning of the noble-gas spin.
    """

    t0: float
    dt: float
    omega: np.ndarray
    delta_s: np.ndarray
    delta_k: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "omega", _as_complex_array(self.omega))
        object.__setattr__(self, "delta_s", _as_float_array(self.delta_s))
        object.__setattr__(self, "delta_k", _as_float_array(self.delta_k))
        if not (len(self.omega) == len(self.delta_s) == len(self.delta_k)):
            raise ValueError("control channels must share one grid length")

    def __len__(self) -> int:
        return len(self.omega)

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self) - 1) * self.dt

    @property
    def delta(self) -> np.ndarray:
        """Exchange frequency mismatch delta_k - delta_s (read-only)."""
        return self.delta_k - self.delta_s

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def same_grid(self, other) -> bool:
        scale = max(abs(self.t0), abs(self.dt), 1e-300)
        return (
            len(self) == len(other)
            and abs(self.t0 - other.t0) <= _GRID_RTOL * scale
            and abs(self.dt - other.dt) <= _GRID_RTOL * self.dt
        )

    def time_reversed(self) -> "ControlSchedule":
        """Schedule for running this stage backwards in time."""
        return ControlSchedule(
            self.t0,
            self.dt,
            np.conj(self.omega[::-1]),
            self.delta_s[::-1].copy(),
            self.delta_k[::-1].copy(),
        )

    @classmethod
    def constant(cls, t0, dt, n, omega=0.0, delta_s=0.0, delta_k=0.0):
        return cls(
            t0,
            dt,
            np.full(n, omega, dtype=np.complex128),
            np.full(n, delta_s, dtype=np.float64),
            np.full(n, delta_k, dtype=np.float64),
        )


@dataclass(frozen=True)
class Trajectory:
    """Time series of the three mode amplitudes plus energy bookkeeping.

    ``n_in``/``n_out`` and the ``loss_*`` series are accumulated inside the
    integrator with the same quadrature order as the state, so the flux
    balance residual reflects integration error only.
    """

    t0: float
    dt: float
    p: np.ndarray
    s: np.ndarray
    k: np.ndarray
    e_out: Envelope
    n_in: np.ndarray
    n_out: np.ndarray
    loss_p: np.ndarray
    loss_s: np.ndarray
    loss_k: np.ndarray
    reduced: bool = False

    def __len__(self) -> int:
        return len(self.s)

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def final_state(self):
        return (self.p[-1], self.s[-1], self.k[-1])

    @property
    def photons_in(self) -> float:
        return float(self.n_in[-1])

    @property
    def photons_out(self) -> float:
        return float(self.n_out[-1])


def exchange_rate_from_microscopic(zeta: float, n_a: float, n_b: float) -> float:
    """Collective exchange rate from the per-pair rate and atom numbers."""
    if zeta < 0 or n_a < 0 or n_b < 0:
        raise ValueError("zeta, n_a and n_b must be non-negative")
    return zeta * math.sqrt(n_a * n_b)


def rhs_full(state, controls_at_t, e_in_at_t, params: PhysicalParams):
    """Time derivative of (P, S, K) for the full three-mode dynamics."""
    p, s, k = state
    omega, delta_s, delta_k = controls_at_t
    j = params.exchange_j
    dp = (
        -(params.gamma_red + 1j * params.delta_cav) * p
        + 1j * omega * s
        + 1j * params.out_coupling * e_in_at_t
    )
    ds = -(params.gamma_s + 1j * delta_s) * s + 1j * np.conj(omega) * p - 1j * j * k
    dk = -(params.gamma_k + 1j * delta_k) * k - 1j * j * s
    return (dp, ds, dk)


def _check_grids(schedule: ControlSchedule, envelope: Envelope):
    if not schedule.same_grid(envelope):
        raise GridMismatch("control schedule and input envelope grids differ")


def _interp3(values: np.ndarray):
    """Per-interval (left, midpoint, right) samples of a piecewise-linear series."""
    left = values[:-1]
    right = values[1:]
    return left, 0.5 * (left + right), right


def propagate_full(
    params: PhysicalParams,
    schedule: ControlSchedule,
    input: Envelope,
    init=(0.0, 0.0, 0.0),
    substeps: int = 1,
    stiffness_limit: float = 0.8,
) -> Trajectory:
    """Integrate the full (P, S, K) system with classical fixed-step RK4.

    Controls and input are piecewise linear between samples and evaluated
    at half steps.  The output field and all energy accumulators are
    integrated through the same RK4 stages.  Raises ``StiffnessError``
    when the step cannot resolve the fastest rate; callers should then
    refine the grid or switch to ``propagate_reduced``.
    """
    _check_grids(schedule, input)
    h = schedule.dt / substeps
    fastest = max(
        params.gamma_red,
        float(np.max(np.abs(schedule.omega))),
        params.exchange_j,
        float(np.max(np.abs(schedule.delta))),
        float(np.max(np.abs(schedule.delta_s))),
        float(np.max(np.abs(schedule.delta_k))),
    )
    if h * fastest > stiffness_limit:
        raise StiffnessError(
            f"dt*max_rate = {h * fastest:.3g} exceeds the stiffness bound "
            f"{stiffness_limit:.3g}; refine the grid or use propagate_reduced"
        )

    n = len(input)
    kappa = params.out_coupling
    gp, gs, gk = params.gamma_p, params.gamma_s, params.gamma_k
    gred = params.gamma_red + 1j * params.delta_cav
    j = params.exchange_j

    p_arr = np.empty(n, dtype=np.complex128)
    s_arr = np.empty(n, dtype=np.complex128)
    k_arr = np.empty(n, dtype=np.complex128)
    acc = np.zeros((n, 5))  # n_in, n_out, loss_p, loss_s, loss_k

    p, s, k = complex(init[0]), complex(init[1]), complex(init[2])
    a_nin = a_nout = a_lp = a_ls = a_lk = 0.0
    p_arr[0], s_arr[0], k_arr[0] = p, s, k

    om = np.asarray(schedule.omega)
    dls = np.asarray(schedule.delta_s)
    dlk = np.asarray(schedule.delta_k)
    ein = np.asarray(input.samples)

    def deriv(p, s, k, omega, delta_s, delta_k, e):
        dp = -gred * p + 1j * omega * s + 1j * kappa * e
        ds = -(gs + 1j * delta_s) * s + 1j * omega.conjugate() * p - 1j * j * k
        dk = -(gk + 1j * delta_k) * k - 1j * j * s
        eo = e + 1j * kappa * p
        d_nin = (e * e.conjugate()).real
        d_nout = (eo * eo.conjugate()).real
        d_lp = 2.0 * gp * (p * p.conjugate()).real
        d_ls = 2.0 * gs * (s * s.conjugate()).real
        d_lk = 2.0 * gk * (k * k.conjugate()).real
        return dp, ds, dk, d_nin, d_nout, d_lp, d_ls, d_lk

    for i in range(n - 1):
        o0, om_i, dls0, dls_i, dlk0, dlk_i, e0, e_i = (
            om[i], om[i + 1], dls[i], dls[i + 1], dlk[i], dlk[i + 1],
            ein[i], ein[i + 1],
        )
        for ss in range(substeps):
            fa = ss / substeps
            fb = (ss + 0.5) / substeps
            fc = (ss + 1.0) / substeps
            ctrls = []
            for f in (fa, fb, fc):
                ctrls.append((
                    o0 + (om_i - o0) * f,
                    dls0 + (dls_i - dls0) * f,
                    dlk0 + (dlk_i - dlk0) * f,
                    e0 + (e_i - e0) * f,
                ))
            (oa, dsa, dka, ea), (ob, dsb, dkb, eb), (oc, dsc, dkc, ec) = ctrls

            k1 = deriv(p, s, k, oa, dsa, dka, ea)
            k2 = deriv(p + 0.5 * h * k1[0], s + 0.5 * h * k1[1],
                       k + 0.5 * h * k1[2], ob, dsb, dkb, eb)
            k3 = deriv(p + 0.5 * h * k2[0], s + 0.5 * h * k2[1],
                       k + 0.5 * h * k2[2], ob, dsb, dkb, eb)
            k4 = deriv(p + h * k3[0], s + h * k3[1], k + h * k3[2],
                       oc, dsc, dkc, ec)
            w = h / 6.0
            p += w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            s += w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            k += w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            a_nin += w * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
            a_nout += w * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4])
            a_lp += w * (k1[5] + 2 * k2[5] + 2 * k3[5] + k4[5])
            a_ls += w * (k1[6] + 2 * k2[6] + 2 * k3[6] + k4[6])
            a_lk += w * (k1[7] + 2 * k2[7] + 2 * k3[7] + k4[7])
        p_arr[i + 1], s_arr[i + 1], k_arr[i + 1] = p, s, k
        acc[i + 1] = (a_nin, a_nout, a_lp, a_ls, a_lk)

    e_out = Envelope(input.t0, input.dt, ein + 1j * kappa * p_arr)
    return Trajectory(
        schedule.t0, schedule.dt, p_arr, s_arr, k_arr, e_out,
        acc[:, 0], acc[:, 1], acc[:, 2], acc[:, 3], acc[:, 4],
        reduced=False,
    )


def propagate_reduced(
    params: PhysicalParams,
    schedule: ControlSchedule,
    input: Envelope,
    init=(0.0, 0.0),
    stiffness_limit: float = 0.8,
    adiabatic_threshold: float = 10.0,
) -> Trajectory:
    """Integrate the two-mode (S, K) system with the optical dipole slaved.

    Valid in the strong-coupling regime where P follows e_in and S
    instantaneously; a warning is emitted when gamma_p*C*T falls below
    ``adiabatic_threshold``.  The reconstructed P series is stored for
    diagnostics and energy bookkeeping.
    """
    _check_grids(schedule, input)
    n = len(input)
    duration = (n - 1) * schedule.dt
    if params.gamma_p * params.cooperativity * duration < adiabatic_threshold:
        warnings.warn(
            "gamma_p*C*T is small; the slaved-dipole model may be inaccurate",
            stacklevel=2,
        )

    gred = params.gamma_red + 1j * params.delta_cav
    kappa = params.out_coupling
    gp, gs, gk = params.gamma_p, params.gamma_s, params.gamma_k
    j = params.exchange_j
    h = schedule.dt

    gamma_om_max = float(np.max(np.abs(schedule.omega))) ** 2 / abs(gred)
    fastest = max(
        gs + gamma_om_max,
        gk,
        j,
        float(np.max(np.abs(schedule.delta_s))),
        float(np.max(np.abs(schedule.delta_k))),
    )
    if h * fastest > stiffness_limit:
        raise StiffnessError(
            f"dt*max_rate = {h * fastest:.3g} exceeds the stiffness bound "
            f"{stiffness_limit:.3g}; refine the grid"
        )

    p_arr = np.empty(n, dtype=np.complex128)
    s_arr = np.empty(n, dtype=np.complex128)
    k_arr = np.empty(n, dtype=np.complex128)
    acc = np.zeros((n, 5))

    s, k = complex(init[0]), complex(init[1])
    a_nin = a_nout = a_lp = a_ls = a_lk = 0.0
    om = np.asarray(schedule.omega)
    dls = np.asarray(schedule.delta_s)
    dlk = np.asarray(schedule.delta_k)
    ein = np.asarray(input.samples)

    def slaved_p(s, omega, e):
        return (1j * omega * s + 1j * kappa * e) / gred

    def deriv(s, k, omega, delta_s, delta_k, e):
        p = slaved_p(s, omega, e)
        ds = -(gs + 1j * delta_s) * s + 1j * omega.conjugate() * p - 1j * j * k
        dk = -(gk + 1j * delta_k) * k - 1j * j * s
        eo = e + 1j * kappa * p
        return (
            ds, dk,
            (e * e.conjugate()).real,
            (eo * eo.conjugate()).real,
            2.0 * gp * (p * p.conjugate()).real,
            2.0 * gs * (s * s.conjugate()).real,
            2.0 * gk * (k * k.conjugate()).real,
        )

    s_arr[0], k_arr[0] = s, k
    p_arr[0] = slaved_p(s, om[0], ein[0])

    for i in range(n - 1):
        oa, oc = om[i], om[i + 1]
        dsa, dsc = dls[i], dls[i + 1]
        dka, dkc = dlk[i], dlk[i + 1]
        ea, ec = ein[i], ein[i + 1]
        ob, dsb, dkb, eb = (
            0.5 * (oa + oc), 0.5 * (dsa + dsc), 0.5 * (dka + dkc),
            0.5 * (ea + ec),
        )
        k1 = deriv(s, k, oa, dsa, dka, ea)
        k2 = deriv(s + 0.5 * h * k1[0], k + 0.5 * h * k1[1], ob, dsb, dkb, eb)
        k3 = deriv(s + 0.5 * h * k2[0], k + 0.5 * h * k2[1], ob, dsb, dkb, eb)
        k4 = deriv(s + h * k3[0], k + h * k3[1], oc, dsc, dkc, ec)
        w = h / 6.0
        s += w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        k += w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        a_nin += w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        a_nout += w * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        a_lp += w * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4])
        a_ls += w * (k1[5] + 2 * k2[5] + 2 * k3[5] + k4[5])
        a_lk += w * (k1[6] + 2 * k2[6] + 2 * k3[6] + k4[6])
        s_arr[i + 1], k_arr[i + 1] = s, k
        p_arr[i + 1] = slaved_p(s, oc, ec)
        acc[i + 1] = (a_nin, a_nout, a_lp, a_ls, a_lk)

    e_out = Envelope(input.t0, input.dt, ein + 1j * kappa * p_arr)
    return Trajectory(
        schedule.t0, schedule.dt, p_arr, s_arr, k_arr, e_out,
        acc[:, 0], acc[:, 1], acc[:, 2], acc[:, 3], acc[:, 4],
        reduced=True,
    )


def output_field(trajectory: Trajectory, input: Envelope, params: PhysicalParams) -> Envelope:
    """Pointwise cavity output e_out = e_in + i*sqrt(2*gamma_p*C)*P."""
    if len(trajectory) != len(input) or not math.isclose(
        trajectory.t0, input.t0, rel_tol=0, abs_tol=_GRID_RTOL * max(abs(input.t0), input.dt)
    ):
        raise GridMismatch("trajectory and input envelope grids differ")
    return Envelope(
        input.t0, input.dt,
        np.asarray(input.samples) + 1j * params.out_coupling * trajectory.p,
    )


def flux_balance(trajectory: Trajectory, input: Envelope) -> float:
    """Excitation-conservation residual of a propagated trajectory.

    Returns N_in + initial atomic excitation minus everything accounted
    for at the end: emitted photons, residual atomic excitation and the
    three dissipation integrals.  Exact dynamics give zero; numerically
    the residual reflects integrator error only.
    """
    if len(trajectory) != len(input):
        raise GridMismatch("trajectory and input envelope grids differ")
    atoms_start = (
        abs(trajectory.p[0]) ** 2 + abs(trajectory.s[0]) ** 2 + abs(trajectory.k[0]) ** 2
    )
    atoms_end = (
        abs(trajectory.p[-1]) ** 2 + abs(trajectory.s[-1]) ** 2 + abs(trajectory.k[-1]) ** 2
    )
    return float(
        trajectory.n_in[-1]
        + atoms_start
        - trajectory.n_out[-1]
        - atoms_end
        - trajectory.loss_p[-1]
        - trajectory.loss_s[-1]
        - trajectory.loss_k[-1]
    )
