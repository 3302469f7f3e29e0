"""Flat-text serialization: envelopes, schedules, tables and reports.

All files are tab-delimited with a header comment naming columns and
units, so any external plotting tool can consume them.  Floats are
written with full precision so emitted files reload bit-identically.
"""

from __future__ import annotations

import numpy as np

from .model import ControlSchedule, Envelope

__all__ = [
    "write_envelope",
    "read_envelope",
    "write_schedule",
    "read_schedule",
    "write_table",
    "read_table",
    "write_report",
    "read_report",
]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_grid_header(fh, t0, dt):
    # exact grid metadata; reconstructing dt from the time column would
    # lose the last bit and break bitwise round-trips
    fh.write(f"# t0_s = {_fmt(t0)}\n# dt_s = {_fmt(dt)}\n")


def _read_grid_header(path):
    t0 = dt = None
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("t0_s ="):
                t0 = float(body.partition("=")[2])
            elif body.startswith("dt_s ="):
                dt = float(body.partition("=")[2])
    return t0, dt


def write_envelope(path, env: Envelope) -> None:
    """Columns: time_s, re_amplitude_per_sqrt_s, im_amplitude_per_sqrt_s."""
    t = env.times()
    with open(path, "w") as fh:
        _write_grid_header(fh, env.t0, env.dt)
        fh.write("# time_s\tre_amplitude_per_sqrt_s\tim_amplitude_per_sqrt_s\n")
        for ti, si in zip(t, env.samples):
            fh.write(f"{_fmt(ti)}\t{_fmt(si.real)}\t{_fmt(si.imag)}\n")


def _load_columns(path, n_cols):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != n_cols:
                raise ValueError(
                    f"{path}: expected {n_cols} columns, got {len(parts)}")
            rows.append([float(p) for p in parts])
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two samples")
    return np.asarray(rows)


def _grid_from_times(t, path):
    dt = np.diff(t)
    if np.any(np.abs(dt - dt[0]) > 1e-9 * dt[0]):
        raise ValueError(f"{path}: time grid is not uniform")
    return float(t[0]), float(dt[0])


def read_envelope(path) -> Envelope:
    data = _load_columns(path, 3)
    t0, dt = _read_grid_header(path)
    if t0 is None or dt is None:
        t0, dt = _grid_from_times(data[:, 0], path)
    return Envelope(t0, dt, data[:, 1] + 1j * data[:, 2])


def write_schedule(path, sched: ControlSchedule, label: str = None) -> None:
    """Columns: time_s, omega_re_per_s, omega_im_per_s, delta_s_per_s,
    delta_k_per_s."""
    t = sched.times()
    with open(path, "w") as fh:
        if label is not None:
            fh.write(f"# stage: {label}\n")
        _write_grid_header(fh, sched.t0, sched.dt)
        fh.write("# time_s\tomega_re_per_s\tomega_im_per_s\t"
                 "delta_s_per_s\tdelta_k_per_s\n")
        for i, ti in enumerate(t):
            fh.write(
                f"{_fmt(ti)}\t{_fmt(sched.omega[i].real)}\t"
                f"{_fmt(sched.omega[i].imag)}\t{_fmt(sched.delta_s[i])}\t"
                f"{_fmt(sched.delta_k[i])}\n"
            )


def read_schedule(path) -> ControlSchedule:
    data = _load_columns(path, 5)
    t0, dt = _read_grid_header(path)
    if t0 is None or dt is None:
        t0, dt = _grid_from_times(data[:, 0], path)
    return ControlSchedule(
        t0, dt, data[:, 1] + 1j * data[:, 2], data[:, 3], data[:, 4])


def write_table(path, columns, rows) -> None:
    """``columns``: list of header names; ``rows``: iterable of tuples."""
    with open(path, "w") as fh:
        fh.write("# " + "\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(
                _fmt(v) if isinstance(v, (int, float, np.floating)) else str(v)
                for v in row) + "\n")


def read_table(path):
    """Returns (columns, rows) with numeric cells parsed as floats."""
    columns = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if columns is None:
                    columns = line[1:].strip().split("\t")
                continue
            cells = []
            for cell in line.split("\t"):
                try:
                    cells.append(float(cell))
                except ValueError:
                    cells.append(cell)
            rows.append(tuple(cells))
    return columns, rows


def write_report(path, items: dict) -> None:
    with open(path, "w") as fh:
        for key, value in items.items():
            if isinstance(value, (float, np.floating)):
                value = _fmt(value)
            fh.write(f"{key} = {value}\n")


def read_report(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out
