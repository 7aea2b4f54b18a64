import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rugose import cli, io, solver
from rugose.config import load_config, output_dir, with_defaults
from rugose.errors import ConfigError, EmptySeries, NonPositiveData
from rugose.experiments import energy_slack, slip_ratios, sweep
from rugose.fitting import fit_loglog
from rugose.geometry import DomainSpec, make_profile
from rugose.grid import build_grid
from rugose.svg import AxesSpec, emit_svg

# ---------------------------------------------------------------- fitting


def test_fit_exact_power_laws():
    f = fit_loglog([(1, 1), (2, 2), (4, 4)])
    assert f.slope == pytest.approx(1.0) and f.r_squared == pytest.approx(1.0)
    assert fit_loglog([(1, 1), (0.5, 0.25), (0.25, 1 / 16)]).slope == pytest.approx(2.0)


def test_fit_noisy_square_root():
    rng = np.random.default_rng(11)
    x = np.logspace(-2, 0, 8)
    y = 3.0 * x**0.5 * (1 + 0.01 * rng.standard_normal(8))
    f = fit_loglog(zip(x, y))
    assert 0.45 <= f.slope <= 0.55 and 0 <= f.r_squared <= 1


@pytest.mark.parametrize("pts", [[(1, 1), (2, 2)], [(1, 1), (2, -2), (3, 3)], [(0, 1), (1, 1), (2, 2)]])
def test_fit_rejects_bad_data(pts):
    with pytest.raises(NonPositiveData):
        fit_loglog(pts)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 100), st.integers(3, 10))
def test_fit_recovers_any_power_law(p, c, n):
    x = np.logspace(-2, 0, n)
    f = fit_loglog(zip(x, c * x**p))
    assert f.slope == pytest.approx(p, abs=1e-9)
    assert math.exp(f.intercept) == pytest.approx(c, rel=1e-8)


# ---------------------------------------------------------------- svg

PTS = [(0.25, 0.1), (0.125, 0.05), (0.0625, 0.025)]


def test_svg_markers_and_single_path():
    doc = emit_svg(PTS, AxesSpec("epsilon", "B1", "t"), fit_loglog(PTS))
    assert doc.count("<circle") == 3 and doc.count("<path") == 1
    assert doc.startswith("<?xml") and 'version="1.1"' in doc
    assert "epsilon" in doc and "B1" in doc


def test_svg_deterministic_and_linear_mode():
    assert emit_svg(PTS) == emit_svg(PTS)
    doc = emit_svg([(0, 1), (1, 3), (2, 2)], AxesSpec("t", "E", log=False))
    assert doc.count("<circle") == 3 and doc.count("<path") == 1


def test_svg_empty():
    with pytest.raises(EmptySeries):
        emit_svg([])


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3)), min_size=1, max_size=12))
def test_svg_marker_count_property(pts):
    doc = emit_svg(pts)
    assert doc.count("<circle") == len(pts) and doc == emit_svg(pts)


# ---------------------------------------------------------------- io


def test_snapshot_roundtrip(tmp_path):
    g = build_grid(DomainSpec(0.25, make_profile("riblet", 1.0, 0.5)), 64, 16)
    s = solver.init_state(g, solver.Shear(1.2, 1.0, 0.5))
    s.t = 0.375
    io.write_snapshot(tmp_path / "s.bin", g, s)
    raw = (tmp_path / "s.bin").read_bytes()
    assert len(raw) == 32 + 4 * 64 * 16 * 8
    desc, fields = io.read_snapshot(tmp_path / "s.bin")
    assert desc["nx"] == 64 and desc["nz"] == 16 and desc["epsilon"] == 0.25 and desc["t"] == 0.375
    assert desc["kind"].value == "riblet"
    assert np.array_equal(fields[0], s.rho) and np.array_equal(fields[1:], s.mom)


def test_field_csv_roundtrip(tmp_path):
    g = build_grid(DomainSpec(0.5, make_profile("flat")), 16, 16)
    f = np.sin(g.x)[:, None] * g.z
    io.write_field_csv(tmp_path / "f.csv", g, f)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "i,k,x,z,value"
    assert np.array_equal(io.read_field_csv(tmp_path / "f.csv"), f)


def test_series_csv(tmp_path):
    g = build_grid(DomainSpec(0.5, make_profile("flat")), 16, 16)
    res = solver.run(solver.RunConfig(solver.FluidParams(), g, solver.Shear(), 0.02, record_dt=0.01))
    io.write_series_csv(tmp_path / "s.csv", res.series)
    text = (tmp_path / "s.csv").read_bytes()
    assert text.split(b"\r\n")[0] == b"t,E,D_cum,D_frob_cum,mass,trace1,trace2,trace3,grad_sq,pressure_fn"
    cols = io.read_series_csv(tmp_path / "s.csv")
    assert np.array_equal(cols["E"], [r.E for r in res.series])


# ---------------------------------------------------------------- config


def test_config_defaults_and_validation():
    cfg = with_defaults({"profile": {"kind": "riblet", "c0": 1.0, "c1": 0.5}})
    assert cfg["grid"]["cells_per_period"] == 16 and cfg["ic"]["kind"] == "shear"
    with pytest.raises(ConfigError):
        with_defaults({"profile": {"kind": "riblet"}, "bogus": 1})
    with pytest.raises(ConfigError):
        with_defaults({"profile": {"kind": "riblet"}, "grid": {"nx": 3}})
    with pytest.raises(ConfigError):
        with_defaults({"profile": {"kind": "riblet"}, "epsilons": [0.125, 0.25]})
    with pytest.raises(ConfigError):
        with_defaults({})


def test_config_files(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_output_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("RUGOSE_OUT", str(tmp_path / "env"))
    assert output_dir({}) == tmp_path / "env"
    assert output_dir({"out": str(tmp_path / "cfg")}) == tmp_path / "cfg"
    assert output_dir({"out": str(tmp_path / "cfg")}, str(tmp_path / "cli")) == tmp_path / "cli"


# ---------------------------------------------------------------- sweep and cli

SMALL = {
    "profile": {"kind": "riblet", "c0": 1.0, "c1": 0.5},
    "epsilons": [0.5, 0.25, 0.125],
    "grid": {"cells_per_period": 16, "nz": 16},
    "fluid": {"mu": 0.01},
    "t_end": 0.04,
    "record_dt": 0.02,
}


def write_cfg(path, **over):
    cfg = {**SMALL, **over}
    path.write_text(json.dumps(cfg))
    return path


def test_single_epsilon_sweep_has_no_fit():
    res = sweep(with_defaults({**SMALL, "epsilons": [0.25]}))
    assert len(res.rows) == 1 and res.fit_B1 is None and "no fit" in res.fit_flag
    assert res.rows[0].status == "ok" and math.isfinite(res.rows[0].B1)


def _failing_at(eps, monkeypatch):
    from rugose import experiments
    from rugose.errors import NonPositiveDensity

    real = experiments.solver.run

    def run(config, initial=None):
        if config.grid.spec.epsilon == eps:
            raise NonPositiveDensity("forced", t=0.01)
        return real(config, initial)

    monkeypatch.setattr(experiments.solver, "run", run)


def test_sweep_records_failures_and_continues(monkeypatch):
    _failing_at(0.25, monkeypatch)
    res = sweep(with_defaults(SMALL))
    assert [r.status == "ok" for r in res.rows] == [True, False, True]
    assert "NonPositiveDensity" in res.rows[1].status
    assert res.fit_B1 is None and "only 2" in res.fit_flag


def test_aggregates():
    g = build_grid(DomainSpec(0.25, make_profile("riblet", 1.0, 0.5)), 64, 16)
    res = solver.run(solver.RunConfig(solver.FluidParams(), g, solver.Shear(1, 1, 1), 0.04, record_dt=0.02))
    b1, b2 = slip_ratios(res.series)
    assert 0 < b1 < b2
    assert energy_slack(res.series) <= 1e-6


def test_cli_geom(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.json")
    assert cli.main(["geom", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "rank=1 direction=(0,1)"
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"profile": {"kind": "eggcarton", "c0": 1, "c1": 0.5, "c2": 0.5}}))
    cli.main(["geom", "--config", str(cfg)])
    assert capsys.readouterr().out.splitlines()[0] == "rank=2"


def test_cli_exit_codes(tmp_path):
    assert cli.main(["geom", "--config", str(tmp_path / "nope.json")]) == 2
    assert cli.main(["run"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"profile": {"kind": "riblet", "c0": 0.1, "c1": 0.5}}))
    assert cli.main(["geom", "--config", str(bad)]) == 2
    under = write_cfg(tmp_path / "u.json", grid={"cells_per_period": 4, "nz": 16})
    assert cli.main(["run", "--config", str(under), "--out", str(tmp_path / "o")]) == 2


def test_cli_numerical_failure_exit_code(tmp_path, monkeypatch):
    _failing_at(0.25, monkeypatch)
    cfg = write_cfg(tmp_path / "c.json")
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 3
    assert len((tmp_path / "x" / "summary.csv").read_text().splitlines()) == 4
    one = write_cfg(tmp_path / "one.json", epsilons=[0.25])
    assert cli.main(["run", "--config", str(one), "--out", str(tmp_path / "y")]) == 3


def test_cli_sweep_outputs_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path / "c.json")
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    summary = (tmp_path / "a" / "summary.csv").read_text().splitlines()
    assert summary[0] == "epsilon,B1,B2,energy_slack,pressure_fn,steps,status"
    assert len(summary) == 1 + 3
    for name in ("summary.csv", "fit.csv", "series_eps_2.csv", "series_eps_8.csv", "B1.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert cli.main(["plot", str(tmp_path / "a" / "summary.csv"), "--out", str(tmp_path / "p")]) == 0
    svg = (tmp_path / "p" / "summary.svg").read_text()
    assert svg.count("<circle") == 3


def test_cli_run_writes_series_and_snapshot(tmp_path, monkeypatch):
    monkeypatch.setenv("RUGOSE_OUT", str(tmp_path / "env"))
    cfg = write_cfg(tmp_path / "c.json", epsilons=[0.25])
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "env" / "series.csv").exists()
    desc, fields = io.read_snapshot(tmp_path / "env" / "final.bin")
    assert desc["t"] == pytest.approx(0.04) and fields.shape == (4, 64, 16)


def test_cli_checks(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.json", epsilons=[0.5, 0.25, 0.125],
                    korn={"t_snapshot": 0.01}, bogovskii={"nz": 16})
    out = str(tmp_path / "o")
    assert cli.main(["trace-check", "--config", str(cfg), "--out", out]) == 0
    assert "slope=" in capsys.readouterr().out
    assert cli.main(["korn-check", "--config", str(cfg), "--out", out, "--seed", "5"]) == 0
    first = (tmp_path / "o" / "korn.csv").read_bytes()
    assert cli.main(["korn-check", "--config", str(cfg), "--out", out, "--seed", "5"]) == 0
    assert (tmp_path / "o" / "korn.csv").read_bytes() == first
    assert cli.main(["bogovskii-check", "--config", str(cfg), "--out", out]) == 0
    header = (tmp_path / "o" / "bogovskii.csv").read_text().splitlines()[0]
    assert header == "epsilon,g_id,norm_ratio,iterations,residual"
