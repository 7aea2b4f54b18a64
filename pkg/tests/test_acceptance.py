"""End-to-end acceptance measurements, one test per criterion.

Each test appends a PASS/FAIL line to the session summary (printed at the
end of the pytest run) before asserting.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from rugose import analysis, bogovskii, experiments, solver
from rugose.config import with_defaults
from rugose.geometry import DomainSpec, Status, make_profile, nondegeneracy_check
from rugose.grid import build_grid, integrate

EPS4 = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
RIBLET = {"kind": "riblet", "c0": 1.0, "c1": 0.5}
EGG = {"kind": "eggcarton", "c0": 1.0, "c1": 0.5, "c2": 0.5}
FLAT = {"kind": "flat", "c0": 1.0}


def report(n, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} :: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def test_criterion_1_equilibrium_and_conservation():
    t0 = time.perf_counter()
    g = build_grid(DomainSpec(1 / 4, make_profile(**EGG)), 64, 32)
    p = solver.FluidParams(a=1.0, gamma=2.0, mu=0.01)
    s = solver.init_state(g, solver.UniformRest(1.0))
    m0 = integrate(g, s.rho)
    dt = solver.cfl_dt(g, p, s, 0.4)
    for _ in range(1000):
        s = solver.step(g, p, s, dt)
    umax = float(np.max(np.abs(s.velocity)))
    drift = abs(integrate(g, s.rho) - m0) / m0
    el = time.perf_counter() - t0
    report(1, "rest equilibrium", umax <= 1e-13 and drift <= 1e-12 and el < 10,
           f"max|u|={umax:.2e} drift={drift:.2e} time={el:.1f}s")


def test_criterion_2_acoustic_speed():
    t0 = time.perf_counter()
    c = experiments.acoustic_pulse_speed(a=1.0, gamma=2.0)
    el = time.perf_counter() - t0
    rel = abs(c / math.sqrt(2.0) - 1.0)
    report(2, "acoustic crest speed", rel <= 0.02 and el < 30,
           f"speed={c:.5f} rel_err={rel:.2e} time={el:.1f}s")


def test_criterion_3_energy_inequality():
    t0 = time.perf_counter()
    g = build_grid(DomainSpec(1 / 8, make_profile(**EGG)), 128, 32)
    p = solver.FluidParams(a=1.0, gamma=2.0, mu=0.01, eta=0.005)
    res = solver.run(solver.RunConfig(p, g, solver.Shear(1.0, 1.0, 1.0), 1.0, record_dt=0.01))
    e0 = res.series[0].E
    worst = max((r.E + r.D_cum) - e0 * (1 + 1e-6) for r in res.series)
    el = time.perf_counter() - t0
    report(3, "energy inequality", worst <= 0 and el < 120 and len(res.series) == 101,
           f"max(E+D_cum-E0(1+1e-6))={worst:.3e} E0={e0:.4f} records={len(res.series)} time={el:.1f}s")


def test_criterion_4_trace_scaling():
    t0 = time.perf_counter()
    cfg = with_defaults({"profile": EGG, "epsilons": EPS4})
    tc = experiments.trace_check(cfg)
    el = time.perf_counter() - t0
    ok = 0.7 <= tc.fit.slope <= 1.3 and math.isfinite(tc.c1) and el < 120
    report(4, "trace ratio scaling", ok,
           f"R={[f'{tc.R[e]:.3e}' for e in tc.epsilons]} slope={tc.fit.slope:.3f} c1={tc.c1:.4g} time={el:.1f}s")


@pytest.fixture(scope="module")
def no_slip_sweeps(tmp_path_factory):
    t0 = time.perf_counter()
    out = {}
    for name, prof in (("riblet", RIBLET), ("flat", FLAT)):
        cfg = with_defaults({"experiment": "sweep", "profile": prof, "epsilons": EPS4})
        d = tmp_path_factory.mktemp(name)
        out[name] = experiments.sweep(cfg, d, jobs=4)
    return out, time.perf_counter() - t0


def test_criterion_5_rugosity_no_slip(no_slip_sweeps):
    res, el = no_slip_sweeps
    rib, flat = res["riblet"], res["flat"]
    ok_runs = all(r.status == "ok" for r in rib.rows + flat.rows)
    s1 = rib.fit_B1.slope if rib.fit_B1 else math.nan
    s2 = rib.fit_B2.slope if rib.fit_B2 else math.nan
    sf = flat.fit_B1.slope if flat.fit_B1 else math.nan
    last = rib.rows[-1]
    ratio = last.B1 / last.B2
    ok = ok_runs and s1 >= 0.5 and s2 <= 0.2 and ratio <= 0.2 and sf <= 0.2 and el < 1200
    report(5, "rugosity-induced no-slip", ok,
           f"riblet B1 slope={s1:.3f} B2 slope={s2:.3f} B1/B2(1/32)={ratio:.3f} "
           f"flat B1 slope={sf:.3f} time={el:.0f}s")


def test_criterion_6_korn_uniformity():
    t0 = time.perf_counter()
    cfg = with_defaults({"profile": EGG, "epsilons": EPS4})
    kc = experiments.korn_check(cfg, seed=0)
    el = time.perf_counter() - t0
    report(6, "Korn ratio uniformity", kc.spread <= 2.0 and el < 60,
           f"max/min={kc.spread:.4f} K range=[{min(r[3] for r in kc.rows):.4f}, "
           f"{max(r[3] for r in kc.rows):.4f}] time={el:.1f}s")


def test_criterion_7_bogovskii():
    t0 = time.perf_counter()
    g = build_grid(DomainSpec(0.5, make_profile(**FLAT)), 8, 8, check_resolution=False)
    data = np.sin(2 * np.pi * g.x)[:, None] * np.sin(np.pi * g.zeta)[None, :] + g.zeta[None, :] ** 2
    it = bogovskii.bogovskii_solve(bogovskii.BogovskiiProblem(g, data, tolerance=1e-12))
    ref = bogovskii.dense_kkt_solve(g, data)
    kkt = max(np.max(np.abs(it.v1 - ref.v1)), np.max(np.abs(it.v3 - ref.v3)))
    cfg = with_defaults({"profile": EGG, "bogovskii": {"epsilons": [1 / 4, 1 / 8, 1 / 16]}})
    bc = experiments.bogovskii_check(cfg)
    el = time.perf_counter() - t0
    report(7, "Bogovskii norm uniformity", bc.spread <= 1.5 and kkt <= 1e-8 and el < 300,
           f"N={[f'{n:.4f}' for n in bc.N.values()]} max/min={bc.spread:.4f} kkt_err={kkt:.1e} time={el:.1f}s")


def test_criterion_8_pressure_functional(no_slip_sweeps):
    res, _ = no_slip_sweeps
    vals = [r.pressure_fn for r in res["riblet"].rows]
    spread = max(vals) / min(vals)
    report(8, "pressure functional uniformity", spread <= 2.0 and all(math.isfinite(v) for v in vals),
           f"values={[f'{v:.4f}' for v in vals]} max/min={spread:.4f}")


def test_criterion_9_classification():
    t0 = time.perf_counter()
    got = [nondegeneracy_check(make_profile(**p)) for p in (FLAT, RIBLET, EGG)]
    ok = (
        got[0].status is Status.CONSTANT
        and got[1].status is Status.DEGENERATE_DIRECTION and got[1].direction == (0.0, 1.0)
        and got[2].status is Status.NON_DEGENERATE
    )
    el = time.perf_counter() - t0
    report(9, "non-degeneracy classification", ok and el < 1.0,
           f"{[r.status.value for r in got]} direction={got[1].direction} time={el * 1e3:.1f}ms")
