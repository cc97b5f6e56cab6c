import json
import math
import os
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslag.cli import main as cli_main
from nslag.core import ConfigError, ICSpec, Params
from nslag.harness import (SERIES_COLUMNS, SERIES_HEADER, RunConfig,
                           acceptance_suite, config_from_dict, config_to_dict,
                           default_config, load_config, mms_convergence,
                           read_series, run_simulation, sweep, write_config,
                           write_series, write_snapshot)


def _quick_cfg(tmp_path, **kw):
    base = dict(
        n_cells=250, t_final=10.0, sample_dt=0.5,
        ic=ICSpec(kind="bump", amp_v=0.2, amp_u=0.2, amp_theta=0.2,
                  center=6.0, width=1.0, floor=0.1),
        series_path=str(tmp_path / "series.csv"),
        report_path=str(tmp_path / "report.json"))
    base.update(kw)
    return replace(default_config(), **base)


def test_default_config_values():
    cfg = default_config()
    assert cfg.params == Params()
    assert (cfg.length, cfg.n_cells) == (50.0, 2000)
    assert cfg.ic.kind == "bump"
    assert (cfg.t_final, cfg.sample_dt) == (100.0, 0.5)
    assert cfg.resolved_probe() == 12
    assert cfg.series_path == "series.csv"
    assert cfg.report_path == "report.json"


def test_minimal_file_takes_defaults(tmp_path):
    path = tmp_path / "one.cfg"
    path.write_text("physics.beta = 1\n")
    cfg = load_config(str(path))
    assert cfg == default_config()


def test_load_config_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("physics.beta = 1\nphysics.mu 2\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:2"):
        load_config(str(path))


def test_load_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("# comment\nphysics.betta = 1\n")
    with pytest.raises(ConfigError, match=r"2.*physics\.betta"):
        load_config(str(path))


def test_load_config_validates_named_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("grid.cells = -5\n")
    with pytest.raises(ConfigError, match=r"grid\.cells"):
        load_config(str(path))


def test_load_config_rejects_bad_value(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("physics.mu = fast\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:1"):
        load_config(str(path))


def test_config_round_trip(tmp_path):
    first = tmp_path / "a.cfg"
    second = tmp_path / "b.cfg"
    write_config(default_config(), str(first))
    cfg = load_config(str(first))
    write_config(cfg, str(second))
    assert first.read_text() == second.read_text()
    assert load_config(str(second)) == cfg


def test_grid_must_resolve_unit_intervals():
    with pytest.raises(ConfigError, match="unit"):
        config_from_dict({"grid.length": 50.0, "grid.cells": 120})


def test_config_rejects_nonpositive_horizon():
    with pytest.raises(ConfigError, match=r"t_final"):
        config_from_dict({"run.t_final": 0.0})


config_floats = st.floats(0.1, 10.0)


@settings(max_examples=30, deadline=None)
@given(beta=config_floats, mu=config_floats, amp=st.floats(-0.5, 0.5),
       cells=st.sampled_from([100, 200, 500, 1000]))
def test_config_dict_round_trip(beta, mu, amp, cells):
    values = {"physics.beta": beta, "physics.mu": mu, "ic.amp_u": amp,
              "grid.cells": cells}
    cfg = config_from_dict(values)
    flat = config_to_dict(cfg)
    assert flat["physics.beta"] == beta
    assert flat["physics.mu"] == mu
    assert flat["ic.amp_u"] == amp
    assert flat["grid.cells"] == cells
    # the flat view resolves the probe default, so compare flat views
    assert config_to_dict(config_from_dict(flat)) == flat


def test_series_header_contract():
    assert SERIES_HEADER == (
        "t,E,V,cumV,vmin,vmax,thmin,thmax,n2_vm1,n2_u,n2_thm1,ninf_vm1,"
        "ninf_u,ninf_thm1,g2_vx,g2_ux,g2_thx,pospart,cum_ux2,cum_pospart,"
        "Y_probe,repr_relerr,farfield_dev")


def test_write_series_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    rows = [{c: float(x) for c, x in zip(SERIES_COLUMNS,
                                         rng.standard_normal(23))}
            for _ in range(4)]
    path = tmp_path / "series.csv"
    write_series(rows, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == SERIES_HEADER
    assert len(lines) == 5
    back = read_series(str(path))
    assert back == rows


def test_write_series_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        write_series([], str(tmp_path / "none.csv"))


def test_snapshot_blocks(tmp_path):
    from nslag.core import build_grid, equilibrium_state
    grid = build_grid(4.0, 4)
    path = tmp_path / "snap.txt"
    write_snapshot(equilibrium_state(grid), grid, str(path))
    text = path.read_text()
    for name in ("v", "u", "theta"):
        assert f"# field {name} at t = 0.0" in text
    # one row per cell for v/theta, per face for u, plus headers and blanks
    assert len([ln for ln in text.splitlines() if ln and not
                ln.startswith("#")]) == 4 + 5 + 4


def test_run_simulation_equilibrium_all_pass(tmp_path):
    cfg = _quick_cfg(tmp_path, ic=ICSpec(kind="equilibrium"))
    report = run_simulation(cfg)
    assert report.all_pass
    rows = read_series(cfg.series_path)
    assert len(rows) == 21
    assert all(row["n2_u"] == 0.0 for row in rows[:1])
    assert max(abs(row["ninf_u"]) for row in rows) <= 1e-13
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["all_pass"] is True
    assert saved["verdicts"].keys() == report.verdicts.keys()


def test_run_simulation_samples_on_cadence(tmp_path):
    cfg = _quick_cfg(tmp_path, ic=ICSpec(kind="equilibrium"), t_final=5.0,
                     sample_dt=0.5)
    run_simulation(cfg)
    rows = read_series(cfg.series_path)
    np.testing.assert_allclose([row["t"] for row in rows],
                               np.arange(0.0, 5.5, 0.5), atol=0)


def test_run_simulation_verdicts_have_thresholds(tmp_path):
    cfg = _quick_cfg(tmp_path)
    report = run_simulation(cfg)
    for name, v in report.verdicts.items():
        assert set(v) >= {"pass", "measured", "threshold"}, name
    assert report.n_steps > 0 and report.wall_seconds > 0
    assert report.e0 > 0 and report.alpha1 < 1 < report.alpha2


def test_run_simulation_rejects_zero_horizon(tmp_path):
    with pytest.raises(ConfigError):
        run_simulation(_quick_cfg(tmp_path, t_final=0.0))


def test_mms_zero_amplitude_is_exact():
    report = mms_convergence(levels=3, base_cells=50, amp=0.0, t_end=0.1)
    assert report["exact"]
    assert report["spatial"]["orders"] == []
    assert all(e < 1e-14 for e in report["spatial"]["errors"])


def test_mms_requires_three_levels():
    with pytest.raises(ConfigError):
        mms_convergence(levels=2)


def test_sweep_outputs_keyed_and_sorted(tmp_path):
    cfg = _quick_cfg(tmp_path, n_cells=100, t_final=6.0)
    reports = sweep(cfg, [2.5, 0.5])
    assert list(reports) == [0.5, 2.5]
    for beta in (0.5, 2.5):
        assert os.path.exists(str(tmp_path / f"series_beta{beta:g}.csv"))
        assert os.path.exists(str(tmp_path / f"report_beta{beta:g}.json"))
        assert reports[beta].config["physics.beta"] == beta


def test_sweep_order_independent(tmp_path, monkeypatch):
    def strip(report):
        d = report.to_dict()
        d.pop("wall_seconds")
        return d

    cfg = _quick_cfg(tmp_path, n_cells=100, t_final=6.0)
    monkeypatch.setenv("NSLAG_THREADS", "1")
    serial = {b: strip(r) for b, r in sweep(cfg, [1.0, 0.5]).items()}
    monkeypatch.setenv("NSLAG_THREADS", "2")
    parallel = {b: strip(r) for b, r in sweep(cfg, [0.5, 1.0]).items()}
    assert serial == parallel


def test_acceptance_empty_criteria_vacuous(tmp_path):
    out = tmp_path / "acc.json"
    report = acceptance_suite(criteria=[], out_path=str(out))
    assert report["all_pass"] and "warning" in report
    assert json.loads(out.read_text())["criteria"] == {}


def test_acceptance_unknown_criterion():
    with pytest.raises(ConfigError):
        acceptance_suite(criteria=[12])


def test_acceptance_unknown_threshold():
    with pytest.raises(ConfigError):
        acceptance_suite(criteria=[10], overrides={"bogus": 1.0})


def test_acceptance_single_cheap_criterion(tmp_path):
    report = acceptance_suite(criteria=[10],
                              out_path=str(tmp_path / "acc.json"))
    entry = report["criteria"]["c10_oracle_agreement"]
    assert entry["pass"]
    assert entry["measured"]["tridiag"] <= 1e-10
    assert entry["measured"]["quadrature"] <= 1e-12


def test_acceptance_zero_thresholds_force_failure(tmp_path):
    """Tightening the energy allowance to zero must flip the verdict."""
    cfg = _quick_cfg(tmp_path, n_cells=250, t_final=10.0)
    report = acceptance_suite(
        cfg, criteria=[3],
        overrides={"energy_margin_rel": 0.0, "energy_margin_abs": 0.0},
        out_path=str(tmp_path / "acc.json"))
    assert not report["all_pass"]
    assert not report["criteria"]["c03_energy_inequality"]["pass"]


def test_cli_run_equilibrium_exit_zero(tmp_path, capsys):
    cfg_path = tmp_path / "eq.cfg"
    cfg_path.write_text(
        "grid.cells = 250\nic.kind = equilibrium\nrun.t_final = 10\n"
        f"out.series = {tmp_path}/s.csv\nout.report = {tmp_path}/r.json\n")
    assert cli_main(["run", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "pass" in out and "FAIL" not in out


def test_cli_unknown_key_exit_two(tmp_path, capsys):
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("grid.cellz = 5\n")
    assert cli_main(["run", "--config", str(cfg_path)]) == 2
    assert "grid.cellz" in capsys.readouterr().err


def test_cli_sweep_aggregate(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NSLAG_THREADS", "1")
    monkeypatch.chdir(tmp_path)
    cfg_path = tmp_path / "q.cfg"
    cfg_path.write_text(
        "grid.cells = 100\nic.kind = equilibrium\nrun.t_final = 6\n"
        f"out.series = {tmp_path}/s.csv\nout.report = {tmp_path}/r.json\n")
    code = cli_main(["sweep", "--config", str(cfg_path), "--beta", "0.5,1",
                     "--out", str(tmp_path / "agg.json")])
    assert code == 0
    agg = json.loads((tmp_path / "agg.json").read_text())
    assert list(agg) == ["0.5", "1"]
    assert all(entry["all_pass"] for entry in agg.values())


def test_cli_check_subset_exit_zero(tmp_path, capsys):
    assert cli_main(["check", "--criteria", "10",
                     "--out", str(tmp_path / "a.json")]) == 0
    assert "c10_oracle_agreement" in capsys.readouterr().out


def test_cli_entry_point_installed(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "nslag.cli", "write-config",
         str(tmp_path / "d.cfg")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert (config_to_dict(load_config(str(tmp_path / "d.cfg")))
            == config_to_dict(default_config()))
