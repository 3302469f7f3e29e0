"""Command-line entry point: scenario runs, optimization, sweeps.

Subcommands: ``simulate`` (protocol end-to-end), ``optimize`` (gradient
ascent for one dimensionless cell), ``map`` (optimized vs analytic
efficiency sweep), ``analytic`` (closed-prescription sweep only) and
``retrieve`` (storage, hold, time-reversed retrieval).  All artifacts
are flat text files in the output directory.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import textio
from .config import ScenarioConfig, load_config, preset_helium, save_config
from .errors import ConfigError, InvalidRegime, NobleMemError
from .kernels import (
    ADIABATIC,
    SEQUENTIAL,
    analytic_efficiency,
    decoupled_relaxation,
)
from .model import ControlSchedule, Envelope
from .protocols import (
    ProtocolPlan,
    Stage,
    build_adiabatic,
    build_sequential,
    run_memory,
)
from .pulses import exponential_input

__all__ = ["main", "cmd_simulate", "cmd_optimize", "cmd_map",
           "cmd_analytic", "cmd_retrieve"]

_UNDEFINED = "undefined"


def _resolve_config(args) -> ScenarioConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif args.preset is not None:
        scheme = args.preset.split("-", 1)[1]
        cfg = preset_helium(scheme)
    else:
        cfg = ScenarioConfig()
    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    return cfg


def _out_dir(cfg: ScenarioConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def _regrid_schedule(sched: ControlSchedule, t0: float, dt: float,
                     n: int) -> ControlSchedule:
    """Resample a schedule onto a uniform grid spanning the same span."""
    t_new = t0 + dt * np.arange(n)
    t_old = sched.times() + (t0 - sched.t0)
    om = np.asarray(sched.omega)
    re = np.interp(t_new, t_old, om.real)
    im = np.interp(t_new, t_old, om.imag)
    ds = np.interp(t_new, t_old, np.asarray(sched.delta_s))
    dk = np.interp(t_new, t_old, np.asarray(sched.delta_k))
    return ControlSchedule(t0, dt, re + 1j * im, ds, dk)


def _apply_dt(plan: ProtocolPlan, env: Envelope, dt: float):
    """Re-run a plan at a user-chosen integration step.

    The first stage is regridded onto the grid of a fresh input
    envelope built with ``dt``; later stages keep their exact duration.
    """
    T = (env.t_end - env.t0) / 3.0
    photons = float(np.trapezoid(np.abs(env.samples) ** 2, dx=env.dt))
    if photons > 0:
        new_env = exponential_input(T, photons, dt)
    else:
        n = max(2, int(round(3.0 * T / dt)) + 1)
        new_env = Envelope.zero(env.t0, dt, n)
    stages = []
    t_prev = None
    for i, st in enumerate(plan.stages):
        if i == 0:
            sched = _regrid_schedule(st.schedule, new_env.t0, new_env.dt,
                                     len(new_env))
        else:
            dur = st.schedule.t_end - st.schedule.t0
            n = max(2, int(round(dur / dt)) + 1)
            sched = _regrid_schedule(st.schedule, t_prev, dur / (n - 1), n)
        t_prev = sched.t_end
        stages.append(Stage(st.label, sched))
    return ProtocolPlan(plan.scheme, tuple(stages), plan.hold_delta,
                        plan.params), new_env


def _build_plan(cfg: ScenarioConfig, dt: float = None):
    params = cfg.params
    T = cfg.pulse_duration_s
    hold_delta = cfg.hold_delta_per_s if cfg.hold_delta_per_s > 0 else None
    if cfg.scheme == SEQUENTIAL:
        plan = build_sequential(params, T, cfg.gamma_omega_per_s,
                                control=cfg.control_style,
                                hold_delta=hold_delta)
    else:
        plan = build_adiabatic(params, T, control=cfg.control_style,
                               hold_delta=hold_delta)
    store = plan.stages[0].schedule
    if cfg.pulse_photons > 0:
        env = exponential_input(T, cfg.pulse_photons, store.dt)
    else:
        env = Envelope.zero(store.t0, store.dt, len(store))
    if dt is not None and dt > 0:
        plan, env = _apply_dt(plan, env, dt)
    return plan, env


def _write_trajectories(out, result) -> None:
    for label, tr in result.trajectories.items():
        t = tr.e_out.times()
        cols = ["time_s", "s_re", "s_im", "k_re", "k_im",
                "eout_re_per_sqrt_s", "eout_im_per_sqrt_s"]
        rows = zip(t, tr.s.real, tr.s.imag, tr.k.real, tr.k.imag,
                   tr.e_out.samples.real, tr.e_out.samples.imag)
        textio.write_table(os.path.join(out, f"trajectory_{label}.tsv"),
                           cols, rows)


def _eta(value) -> object:
    return _UNDEFINED if value is None else value


def _run_cycle(cfg: ScenarioConfig, dt, hold_duration: float,
               summary_name: str) -> None:
    out = _out_dir(cfg)
    plan, env = _build_plan(cfg, dt)
    result = run_memory(cfg.params, env, plan, hold_duration=hold_duration,
                        engine=cfg.engine)
    save_config(os.path.join(out, "config.txt"), cfg)
    textio.write_envelope(os.path.join(out, "input.tsv"), env)
    textio.write_envelope(os.path.join(out, "output.tsv"), result.output)
    for st in plan.stages:
        textio.write_schedule(os.path.join(out, f"schedule_{st.label}.tsv"),
                              st.schedule, label=st.label)
    _write_trajectories(out, result)
    eta_total = result.eta_total
    summary = {
        "scheme": cfg.scheme,
        "engine": cfg.engine,
        "seed": cfg.seed,
        "photons_in": cfg.pulse_photons,
        "eta_store": _eta(result.eta_store),
        "eta_retrieve": _eta(result.eta_retrieve),
        "eta_total": _eta(eta_total),
        "eta_mode_matched": _eta(result.eta_mode_matched),
        "stored_k_re": result.stored_k.real,
        "stored_k_im": result.stored_k.imag,
        "hold_duration_s": hold_duration,
        "hold_delta_per_s": plan.hold_delta,
        "hold_decay_per_s": decoupled_relaxation(cfg.params, plan.hold_delta),
    }
    textio.write_report(os.path.join(out, summary_name), summary)
    print(f"eta_total = {_eta(eta_total)}  (artifacts in {out})")


def cmd_simulate(cfg: ScenarioConfig, dt: float = None) -> None:
    """Run the configured protocol end-to-end (no hold)."""
    _run_cycle(cfg, dt, 0.0, "summary.txt")


def cmd_retrieve(cfg: ScenarioConfig, dt: float = None) -> None:
    """Storage, configured hold under decoupling, then retrieval."""
    _run_cycle(cfg, dt, cfg.hold_duration_s, "summary.txt")


def cmd_optimize(cfg: ScenarioConfig) -> None:
    """Gradient ascent for one (gamma_s*T, J/gamma_s) cell."""
    from .control import optimize_cell

    out = _out_dir(cfg)
    res = optimize_cell(
        cfg.opt_gamma_st, cfg.opt_j_over_gs,
        photons=max(cfg.pulse_photons, 1.0),
        max_iter=cfg.opt_max_iter, tol=cfg.opt_tol,
    )
    save_config(os.path.join(out, "config.txt"), cfg)
    cv = res.controls
    textio.write_table(
        os.path.join(out, "controls.tsv"),
        ["time_gamma_s", "omega_re", "omega_im", "delta_s", "delta"],
        zip(cv.times, cv.omega_re, cv.omega_im, cv.delta_s, cv.delta),
    )
    textio.write_table(os.path.join(out, "history.tsv"),
                       ["iteration", "eta"], res.history)
    textio.write_report(os.path.join(out, "optimize.txt"), {
        "gamma_st": cfg.opt_gamma_st,
        "j_over_gs": cfg.opt_j_over_gs,
        "seed": cfg.seed,
        "eta_inf": res.eta_inf,
        "classification": res.classification,
        "iterations": res.iterations,
        "converged": res.converged,
        "gradient_norm_final": res.gradient_norm_final,
    })
    print(f"eta_inf = {res.eta_inf:.6f}  classification = "
          f"{res.classification}  (artifacts in {out})")


def _analytic_cell(gamma_st: float, j_over_gs: float) -> dict:
    """Best optimizer-free efficiency prediction for a dimensionless cell.

    Evaluates both schemes under the fixed-rate prescriptions and under
    matched pulse shaping (all closed-form) and keeps the maximum.
    """
    from .kernels import matched_efficiency
    from .model import PhysicalParams

    params = PhysicalParams(gamma_p=1.0, gamma_s=1.0, gamma_k=0.0,
                            cooperativity=1e12, exchange_j=float(j_over_gs))
    etas = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for scheme in (SEQUENTIAL, ADIABATIC):
            try:
                etas[scheme] = analytic_efficiency(
                    scheme, params, float(gamma_st))
            except InvalidRegime:
                etas[scheme] = float("nan")
            try:
                etas[f"{scheme}_matched"] = matched_efficiency(
                    scheme, params, float(gamma_st))
            except InvalidRegime:
                etas[f"{scheme}_matched"] = float("nan")
    valid = {k: v for k, v in etas.items() if np.isfinite(v)}
    if valid:
        best = max(valid, key=valid.get)
        eta_max = valid[best]
    else:
        best, eta_max = "none", 0.0
    return {
        "gamma_st": float(gamma_st),
        "j_over_gs": float(j_over_gs),
        "eta_sequential": etas[SEQUENTIAL],
        "eta_adiabatic": etas[ADIABATIC],
        "eta_sequential_matched": etas[f"{SEQUENTIAL}_matched"],
        "eta_adiabatic_matched": etas[f"{ADIABATIC}_matched"],
        "eta_max": eta_max,
        "best_scheme": best,
    }


def _map_axes(cfg: ScenarioConfig):
    gts = np.geomspace(cfg.map_gamma_st_min, cfg.map_gamma_st_max,
                       cfg.map_gamma_st_points)
    jrs = np.geomspace(cfg.map_j_over_gs_min, cfg.map_j_over_gs_max,
                       cfg.map_j_over_gs_points)
    return gts, jrs


def _write_analytic_table(out, name, gts, jrs):
    cells = [_analytic_cell(gt, jr) for gt in gts for jr in jrs]
    textio.write_table(
        os.path.join(out, name),
        ["gamma_st", "j_over_gs", "eta_sequential", "eta_adiabatic",
         "eta_sequential_matched", "eta_adiabatic_matched",
         "eta_max", "best_scheme"],
        [tuple(c.values()) for c in cells],
    )
    return cells


def cmd_analytic(cfg: ScenarioConfig) -> None:
    """Closed-prescription efficiency over the configured grid."""
    out = _out_dir(cfg)
    save_config(os.path.join(out, "config.txt"), cfg)
    gts, jrs = _map_axes(cfg)
    _write_analytic_table(out, "analytic_map.tsv", gts, jrs)
    print(f"analytic map: {len(gts)}x{len(jrs)} cells  (artifacts in {out})")


def _map_row(args):
    # top-level so a process pool can pickle it; one row = one gamma_s*T
    from .control import efficiency_map

    index, gamma_st, jrs, max_iter, tol = args
    return index, efficiency_map([gamma_st], jrs, max_iter=max_iter, tol=tol)


def cmd_map(cfg: ScenarioConfig, workers: int = 1) -> None:
    """Optimized and analytic efficiency maps plus their difference.

    Rows (fixed gamma_s*T) are independent -- warm starts only run along
    J within a row -- so they fan out across a process pool; results are
    merged by row index, keeping the output deterministic.
    """
    out = _out_dir(cfg)
    save_config(os.path.join(out, "config.txt"), cfg)
    gts, jrs = _map_axes(cfg)
    jobs = [(i, float(gt), list(map(float, jrs)), cfg.opt_max_iter,
             cfg.opt_tol) for i, gt in enumerate(gts)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_map_row, jobs))
        opt_rows = [row for i in range(len(gts)) for row in results[i]]
    else:
        opt_rows = [row for job in jobs for row in _map_row(job)[1]]

    textio.write_table(
        os.path.join(out, "optimized_map.tsv"),
        ["gamma_st", "j_over_gs", "eta_inf", "classification",
         "iterations", "converged"],
        [(r["gamma_st"], r["j_over_gs"], r["eta_inf"], r["classification"],
          r["iterations"], int(r["converged"])) for r in opt_rows],
    )
    ana_cells = _write_analytic_table(out, "analytic_map.tsv", gts, jrs)
    textio.write_table(
        os.path.join(out, "difference_map.tsv"),
        ["gamma_st", "j_over_gs", "optimized_minus_analytic"],
        [(o["gamma_st"], o["j_over_gs"], o["eta_inf"] - a["eta_max"])
         for o, a in zip(opt_rows, ana_cells)],
    )
    print(f"map: {len(opt_rows)} cells  (artifacts in {out})")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="noblemem",
        description="Optical quantum memory on noble-gas spins: "
                    "simulation, optimal control and parameter sweeps.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("simulate", "run the configured protocol end-to-end"),
        ("optimize", "gradient-ascent optimization of one cell"),
        ("map", "optimized vs analytic efficiency sweep"),
        ("analytic", "closed-prescription efficiency sweep"),
        ("retrieve", "storage, hold, and time-reversed retrieval"),
    ):
        q = sub.add_parser(name, help=doc)
        q.add_argument("--config", help="path to a key=value scenario file")
        q.add_argument("--preset",
                       choices=["helium-sequential", "helium-adiabatic"],
                       help="built-in potassium/helium-3 scenario")
        q.add_argument("--out", help="output directory (overrides config)")
        q.add_argument("--seed", type=int, help="random seed recorded "
                       "with the artifacts (overrides config)")
        q.add_argument("--workers", type=int, default=1,
                       help="worker processes for map sweeps")
        q.add_argument("--dt", type=float,
                       help="integration step override in seconds")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "simulate":
            cmd_simulate(cfg, dt=args.dt)
        elif args.command == "retrieve":
            cmd_retrieve(cfg, dt=args.dt)
        elif args.command == "optimize":
            cmd_optimize(cfg)
        elif args.command == "analytic":
            cmd_analytic(cfg)
        elif args.command == "map":
            cmd_map(cfg, workers=max(1, args.workers))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NobleMemError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
