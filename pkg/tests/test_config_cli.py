"""Configuration parsing, text round-trips and CLI contracts."""

import filecmp
import os

import numpy as np
import pytest

from noblemem import ConfigError, load_config, preset_helium, save_config
from noblemem.cli import main
from noblemem.config import ScenarioConfig
from noblemem.model import ControlSchedule
from noblemem.pulses import exponential_input
from noblemem import textio


# ---------------------------------------------------------------- config

def test_preset_helium_values():
    cfg = preset_helium("sequential")
    assert cfg.exchange_j_per_s == 1000.0
    assert cfg.gamma_s_per_s == 17.0
    assert cfg.cooperativity == 100.0
    assert cfg.gamma_k_per_s == pytest.approx(2.78e-6, rel=1e-2)
    assert cfg.gamma_omega_per_s == 1e4
    assert cfg.pulse_duration_s == 15e-6
    assert preset_helium("adiabatic").pulse_duration_s == 15e-3
    with pytest.raises(ConfigError):
        preset_helium("bogus")


def test_config_round_trip(tmp_path):
    cfg = preset_helium("adiabatic")
    cfg.seed = 42
    path = tmp_path / "cfg.txt"
    save_config(path, cfg)
    again = load_config(path)
    assert again == cfg
    # bitwise stability of a second save
    path2 = tmp_path / "cfg2.txt"
    save_config(path2, again)
    assert path.read_text() == path2.read_text()


def test_config_rejects_unknown_and_duplicate_keys(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("no_such_key = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(path)
    path.write_text("seed = 1\nseed = 2\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(path)
    path.write_text("seed\n")
    with pytest.raises(ConfigError, match="key = value"):
        load_config(path)
    path.write_text("seed = pi\n")
    with pytest.raises(ConfigError, match="bad value"):
        load_config(path)


def test_config_validates_physical_ranges():
    with pytest.raises(ConfigError):
        ScenarioConfig(gamma_p_per_s=-1.0)
    with pytest.raises(ConfigError):
        ScenarioConfig(scheme="other")
    with pytest.raises(ConfigError):
        ScenarioConfig(map_gamma_st_min=1.0, map_gamma_st_max=0.1)
    # zero photons is a legal degenerate input
    ScenarioConfig(pulse_photons=0.0)


# ---------------------------------------------------------------- textio

def test_envelope_round_trip_is_bitwise(tmp_path):
    env = exponential_input(1.3e-5, 0.7, 1e-7)
    p1, p2 = tmp_path / "e1.tsv", tmp_path / "e2.tsv"
    textio.write_envelope(p1, env)
    again = textio.read_envelope(p1)
    assert again.t0 == env.t0 and again.dt == env.dt
    assert np.array_equal(again.samples, env.samples)
    textio.write_envelope(p2, again)
    assert p1.read_text() == p2.read_text()


def test_schedule_round_trip_is_bitwise(tmp_path):
    sched = ControlSchedule.constant(-3e-5, 1.37e-7, 220,
                                     omega=123.4 + 7.8j, delta_s=3.3,
                                     delta_k=1e5 / 3.0)
    p1, p2 = tmp_path / "s1.tsv", tmp_path / "s2.tsv"
    textio.write_schedule(p1, sched, label="store")
    again = textio.read_schedule(p1)
    assert np.array_equal(np.asarray(again.omega), np.asarray(sched.omega))
    textio.write_schedule(p2, again, label="store")
    assert p1.read_text() == p2.read_text()


def test_table_and_report_round_trip(tmp_path):
    path = tmp_path / "t.tsv"
    textio.write_table(path, ["a", "b"], [(1.5, "x"), (2.5, "y")])
    cols, rows = textio.read_table(path)
    assert cols == ["a", "b"]
    assert rows == [(1.5, "x"), (2.5, "y")]
    rpath = tmp_path / "r.txt"
    textio.write_report(rpath, {"eta": 0.93, "scheme": "sequential"})
    rep = textio.read_report(rpath)
    assert float(rep["eta"]) == 0.93
    assert rep["scheme"] == "sequential"


# ------------------------------------------------------------------- cli

def test_cli_simulate_preset_writes_summary(tmp_path):
    out = tmp_path / "run"
    rc = main(["simulate", "--preset", "helium-sequential",
               "--out", str(out)])
    assert rc == 0
    rep = textio.read_report(out / "summary.txt")
    assert 0.91 <= float(rep["eta_total"]) <= 0.95
    for name in ("input.tsv", "output.tsv", "config.txt",
                 "schedule_store.tsv", "schedule_swap.tsv",
                 "trajectory_store.tsv"):
        assert (out / name).exists()
    # emitted envelope files reload
    textio.read_envelope(out / "output.tsv")


def test_cli_zero_photon_input_reports_undefined(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("pulse_photons = 0\npulse_duration_s = 15e-6\n"
                   "scheme = sequential\n")
    out = tmp_path / "run"
    rc = main(["simulate", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    rep = textio.read_report(out / "summary.txt")
    assert rep["eta_total"] == "undefined"
    assert rep["eta_store"] == "undefined"


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("mystery = 3\n")
    assert main(["simulate", "--config", str(bad)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.txt")]) == 2
    # numerical failure: integration step too coarse for the pulse
    out = tmp_path / "run"
    assert main(["simulate", "--preset", "helium-sequential",
                 "--out", str(out), "--dt", "1e-2"]) == 3


def test_cli_optimize_is_deterministic(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("opt_gamma_st = 0.5\nopt_j_over_gs = 5\n"
                   "opt_max_iter = 8\n")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(["optimize", "--config", str(cfg), "--out", str(out),
                   "--seed", "7"])
        assert rc == 0
        outs.append(out)
    assert filecmp.cmp(outs[0] / "history.tsv", outs[1] / "history.tsv",
                       shallow=False)
    assert filecmp.cmp(outs[0] / "controls.tsv", outs[1] / "controls.tsv",
                       shallow=False)


def test_cli_map_emits_aligned_tables(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        "map_gamma_st_points = 2\nmap_j_over_gs_points = 2\n"
        "map_gamma_st_min = 0.1\nmap_gamma_st_max = 10\n"
        "map_j_over_gs_min = 5\nmap_j_over_gs_max = 50\n"
        "opt_max_iter = 10\n"
    )
    out = tmp_path / "run"
    rc = main(["map", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    _, opt = textio.read_table(out / "optimized_map.tsv")
    _, ana = textio.read_table(out / "analytic_map.tsv")
    _, diff = textio.read_table(out / "difference_map.tsv")
    assert len(opt) == len(ana) == len(diff) == 4
    for o, a, d in zip(opt, ana, diff):
        assert (o[0], o[1]) == (a[0], a[1]) == (d[0], d[1])
        assert 0.0 <= o[2] <= 1.0


def test_cli_retrieve_applies_hold(tmp_path):
    cfg = tmp_path / "cfg.txt"
    base = preset_helium("sequential")
    base.hold_duration_s = 1.0 / base.gamma_k_per_s
    save_config(cfg, base)
    out = tmp_path / "run"
    rc = main(["retrieve", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    rep = textio.read_report(out / "summary.txt")
    # one noble-gas lifetime of hold costs a factor ~1/e
    assert float(rep["eta_total"]) == pytest.approx(0.93 * np.exp(-1.0),
                                                    rel=0.05)
