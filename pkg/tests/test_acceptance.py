"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances and runtime budgets are pinned below.  Every test reports its
measured numbers before asserting, so a failing criterion still leaves an
informative line in the terminal summary (see ``conftest.acceptance``).
"""

import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from wklab.action import kernel_family, minplus, peierls_barrier
from wklab.grid import make_grid, random_field
from wklab.harness.cli import run_cli
from wklab.harness.config import load_config
from wklab.harness.ergodize import ergodization_probe
from wklab.harness.rates import RESIDUAL_LIMIT, limit_distance_1d, rate_experiment
from wklab.harness.sharpness import sharpness_example, tent_lower_bound
from wklab.models import GOLDEN, Integrable, Mechanical, PeriodicDrift
from wklab.operators import (
    fixed_point,
    make_state,
    window_min_autonomous_rows,
    window_min_periodic_rows,
)
from wklab.weakkam import aubry_set, space_time_field, verify_field

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

ALGEBRA_PAIRS = 200
ALGEBRA_SLACK = 1e-9
DOMINANCE_SLACK = 1e-9
LIMIT_TOL = 5e-3
CLASSIC_SLOPE = (-1.3, -0.7)
WINDOWED_SLOPE_MAX = -1.4
BARRIER_TOL = 2e-2
CAUCHY_SHRINK = 0.7
CAUCHY_FLOOR = 1e-9
DOMINATION_TOL = 2e-2
DEFECT_TOL = 1e-2
AUBRY_TOL = 2e-2
ERGODIZE_TARGET, ERGODIZE_BAND = -2.0, 0.5


@pytest.fixture(scope="module")
def rate_study():
    cfg = load_config(CONFIGS / "rates_integrable_2d.ini")
    t0 = time.perf_counter()
    study = rate_experiment(cfg, seed=0)
    return study, time.perf_counter() - t0


# --- 1: operator algebra ----------------------------------------------------

def _pairs(grid, rng, count):
    u = np.array([random_field(grid, rng).samples for _ in range(count)])
    w = np.array([random_field(grid, rng, amplitude=2.0).samples for _ in range(count)])
    c = rng.uniform(-50, 50, size=(count, 1))
    return u, w, c


def _algebra_excess(T, u, w, c):
    """Largest violation of monotonicity, shift equivariance and non-expansiveness."""
    v = np.maximum(u, w)
    Tu, Tw, Tv, Tuc = T(u), T(w), T(v), T(u + c)
    mono = np.max(Tu - Tv)
    shift = np.max(np.abs(Tuc - Tu - c))
    lip = np.max(np.max(np.abs(Tw - Tu), axis=1) - np.max(np.abs(w - u), axis=1))
    return max(mono, shift, lip, 0.0)


def test_criterion_01_operator_algebra(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    excess = {}
    g1 = make_grid(1, 128)
    drift = make_state(PeriodicDrift(), random_field(g1, rng), critical="exact")
    pend = make_state(Mechanical(), random_field(g1, rng), critical="exact")
    ops1 = {
        "one_step": lambda r: minplus(r, pend.family.sub(0).cost),
        "window_periodic": lambda r: window_min_periodic_rows(drift, r, 2, 0.25),
        "window_autonomous": lambda r: window_min_autonomous_rows(pend, r, 0.5),
    }
    u, w, c = _pairs(g1, rng, ALGEBRA_PAIRS)
    for name, T in ops1.items():
        excess[f"1d/{name}"] = _algebra_excess(T, u, w, c)
    # 2D kernels are dense 1024 x 1024 tables; the shortest window keeps the budget
    g2 = make_grid(2, 32)
    pend2 = make_state(Mechanical(n=2), random_field(g2, rng), critical="zero")
    ops2 = {
        "one_step": lambda r: minplus(r, pend2.family.sub(0).cost),
        "window_autonomous": lambda r: window_min_autonomous_rows(pend2, r, pend2.family.dt),
    }
    u, w, c = _pairs(g2, rng, ALGEBRA_PAIRS)
    for name, T in ops2.items():
        excess[f"2d/{name}"] = _algebra_excess(T, u, w, c)
    runtime = time.perf_counter() - t0
    worst = max(excess.values())
    ok = worst <= ALGEBRA_SLACK and runtime < 30
    acceptance(1, ok, f"max violation {worst:.2e} over {len(excess)} operators "
                      f"x {ALGEBRA_PAIRS} pairs (slack {ALGEBRA_SLACK:g}); {runtime:.1f} s")
    assert ok, excess


# --- 2, 4, 6: rates on the closed-form path ---------------------------------

def test_criterion_02_windowed_dominance(acceptance, rate_study):
    study, runtime = rate_study
    gaps = [w - c for _, c, w in study.rows()]
    ok = all(study.dominance) and runtime < 120
    acceptance(2, ok, f"dist_windowed - dist_classic <= {max(gaps):.3e} over "
                      f"{len(gaps)} times (slack {DOMINANCE_SLACK:g}); {runtime:.1f} s")
    assert ok


def test_criterion_03_limit_of_classic_operator(acceptance):
    t0 = time.perf_counter()
    d = float(limit_distance_1d(GOLDEN, [2000.0], sample_resolution=512, seed=0)[0])
    runtime = time.perf_counter() - t0
    ok = d <= LIMIT_TOL and runtime < 60
    acceptance(3, ok, f"sup |T_2000 u - min u| = {d:.3e} (tol {LIMIT_TOL:g}); {runtime:.1f} s")
    assert ok


def test_criterion_04_classic_rate(acceptance, rate_study):
    rep = rate_study[0].classic
    lo, hi = CLASSIC_SLOPE
    ok = rep.status == "ok" and lo <= rep.fitted_slope <= hi
    acceptance(4, ok, f"classic slope {rep.fitted_slope:.3f} in [{lo}, {hi}], residual "
                      f"{rep.residual_of_fit:.3f}, {rep.used} samples, status {rep.status}")
    assert ok


def test_criterion_05_sharpness(acceptance):
    cfg = load_config(CONFIGS / "sharpness.ini")
    ex = cfg.experiment
    t0 = time.perf_counter()
    rows = sharpness_example(ex.delta, GOLDEN, ex.m_count, np.asarray(ex.x0))
    runtime = time.perf_counter() - t0
    scaled = [r.scaled for r in rows]
    lower, upper = tent_lower_bound(ex.delta), 10 * ex.delta**2 / 32
    ok = (len(rows) == 6 and min(scaled) >= lower and min(scaled) <= upper and runtime < 30)
    acceptance(5, ok, f"t*T_t u(x0) in [{min(scaled):.3e}, {max(scaled):.3e}] at t = "
                      f"{[int(r.t) for r in rows]}; bound {lower:.3e}, one <= {upper:.3e}; "
                      f"{runtime:.1f} s")
    assert ok


def test_criterion_06_windowed_rate(acceptance, rate_study):
    study, runtime = rate_study
    rep = study.windowed
    if rep.status == "inconclusive":
        ok = all(study.dominance) and runtime < 180
        verdict = "inconclusive (fit residual above limit), dominance holds"
    else:
        ok = rep.status == "ok" and rep.fitted_slope <= WINDOWED_SLOPE_MAX and runtime < 180
        verdict = f"status {rep.status}"
    acceptance(6, ok, f"windowed slope {rep.fitted_slope:.3f} (need <= {WINDOWED_SLOPE_MAX}), "
                      f"residual {rep.residual_of_fit:.3f} (limit {RESIDUAL_LIMIT}); {verdict}")
    assert ok


# --- 7: pendulum barrier against quadrature ----------------------------------

def _pendulum_potential(x):
    """Phi(x, 0) = min over both arcs of the integral of sqrt(2 U), U = 1 - cos 2 pi s."""
    f = lambda s: np.sqrt(2.0 * (1.0 - np.cos(2 * np.pi * s)))
    return min(quad(f, 0.0, x)[0], quad(f, x, 1.0)[0])


def test_criterion_07_pendulum_barrier(acceptance):
    cfg = load_config(CONFIGS / "pendulum.ini")
    t0 = time.perf_counter()
    model, grid = cfg.build_model(), cfg.make_grid()
    fam = kernel_family(model, grid, cfg.operator.dt, cfg.operator.v_max)
    c = fam.critical_value()
    h = peierls_barrier(model, grid, 0.0, 0.0, cfg.operator.window_n, cfg.operator.dt,
                        cfg.operator.v_max, c).values
    phi = np.array([_pendulum_potential(x) for x in grid.coords()[:, 0]])
    barrier_err = float(np.max(np.abs(h - (phi[:, None] + phi[None, :]))))
    u0 = random_field(grid, np.random.default_rng(0))
    ubar = fixed_point(make_state(model, u0, cfg.operator.dt, cfg.operator.v_max, "exact"),
                       tol=1e-10).samples
    rep = np.min(u0.samples[:, None] + h, axis=0)
    fp_err = float(np.max(np.abs(ubar - rep)))
    runtime = time.perf_counter() - t0
    ok = barrier_err <= BARRIER_TOL and fp_err <= BARRIER_TOL and runtime < 120
    acceptance(7, ok, f"barrier vs quadrature {barrier_err:.2e}, fixed point vs "
                      f"min(u0 + h) {fp_err:.2e} (tol {BARRIER_TOL:g}); {runtime:.1f} s")
    assert ok


# --- 8: time-periodic pipeline ------------------------------------------------

def test_criterion_08_periodic_pipeline(acceptance):
    cfg = load_config(CONFIGS / "drift.ini")
    t0 = time.perf_counter()
    model, grid = cfg.build_model(), cfg.make_grid()
    state = make_state(model, random_field(grid, np.random.default_rng(0)),
                       cfg.operator.dt, cfg.operator.v_max, "exact")
    ns = [8, 16, 32, 64, 128, 256]
    U = [window_min_periodic_rows(state, state.current.samples, n) for n in ns]
    res = [float(np.max(np.abs(b - a))) for a, b in zip(U, U[1:])]
    cauchy = all(r1 <= CAUCHY_FLOOR or r1 <= CAUCHY_SHRINK * r0 for r0, r1 in zip(res, res[1:]))
    limit = state.current.with_samples(U[-1])
    fam = state.family
    ex = cfg.experiment
    report, passed = verify_field(space_time_field(fam, limit, state.c_estimate), fam,
                                  state.c_estimate, sample_pairs=ex.sample_pairs,
                                  tol=DOMINATION_TOL, defect_tol=DEFECT_TOL, span=ex.span,
                                  window_n=64, seed=0)
    runtime = time.perf_counter() - t0
    ok = cauchy and passed and runtime < 180
    acceptance(8, ok, f"doubling residuals {['%.1e' % r for r in res]}; "
                      f"{report.violations} violations / {report.pairs} pairs, "
                      f"defect {report.max_defect:.1e}; {runtime:.1f} s")
    assert ok


# --- 9: Aubry sets -------------------------------------------------------------

def test_criterion_09_aubry_sets(acceptance):
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "pendulum.ini")
    fam = kernel_family(cfg.build_model(), cfg.make_grid(), cfg.operator.dt, cfg.operator.v_max)
    N = fam.grid.size
    pend = aubry_set(fam, 0.0, cfg.operator.window_n, AUBRY_TOL, fam.critical_value())
    pend_ok = 0 in pend and set(pend.tolist()) <= {N - 1, 0, 1}
    cfg_i = load_config(CONFIGS / "integrable_1d.ini")
    fam_i = kernel_family(cfg_i.build_model(), cfg_i.make_grid(), cfg_i.operator.dt,
                          cfg_i.operator.v_max)
    integ = aubry_set(fam_i, 0.0, cfg_i.operator.window_n, AUBRY_TOL, fam_i.critical_value())
    integ_ok = integ.size == fam_i.grid.size
    runtime = time.perf_counter() - t0
    ok = pend_ok and integ_ok and runtime < 60
    acceptance(9, ok, f"pendulum {pend.size} nodes (need {{0}} +- 1), integrable "
                      f"{integ.size}/{fam_i.grid.size} nodes (tol {AUBRY_TOL:g}); {runtime:.1f} s")
    assert ok


# --- 10: ergodization -----------------------------------------------------------

def test_criterion_10_ergodization_scaling(acceptance):
    cfg = load_config(CONFIGS / "ergodize.ini")
    ex = cfg.experiment
    t0 = time.perf_counter()
    res = ergodization_probe(cfg.omega(), ex.radii, np.asarray(ex.x0), ex.probe_resolution,
                             ex.horizon)
    runtime = time.perf_counter() - t0
    ok = (not res.timeouts and abs(res.slope - ERGODIZE_TARGET) <= ERGODIZE_BAND
          and runtime < 60)
    acceptance(10, ok, f"slope of log T vs log R {res.slope:.3f} (need {ERGODIZE_TARGET} +- "
                       f"{ERGODIZE_BAND}); T = {['%.2f' % t for t in res.times]}; {runtime:.1f} s")
    assert ok


# --- 11: determinism ------------------------------------------------------------

RUNS = [
    ("rates", "rates_integrable_2d.ini"),
    ("sharpness", "sharpness.ini"),
    ("solve", "drift.ini"),
    ("verify", "drift.ini"),
    ("barrier", "pendulum.ini"),
    ("aubry", "pendulum.ini"),
    ("ergodize", "ergodize.ini"),
]


def test_criterion_11_determinism(acceptance, tmp_path):
    mismatched = []
    files = 0
    for cmd, cfg in RUNS:
        dirs = [tmp_path / f"{cmd}_{i}" for i in (0, 1)]
        codes = [run_cli([cmd, "--config", str(CONFIGS / cfg), "--out", str(d), "--seed", "7"])
                 for d in dirs]
        assert codes[0] == codes[1] and codes[0] in (0, 1), (cmd, codes)
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == sorted(p.name for p in dirs[1].iterdir())
        for name in names:
            files += 1
            if (dirs[0] / name).read_bytes() != (dirs[1] / name).read_bytes():
                mismatched.append(f"{cmd}/{name}")
    ok = not mismatched
    acceptance(11, ok, f"{files} output files from {len(RUNS)} commands compared, "
                       f"{len(mismatched)} differ")
    assert ok, mismatched
