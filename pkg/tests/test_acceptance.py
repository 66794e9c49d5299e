"""Acceptance criteria, one test per criterion; each prints a single PASS/FAIL line."""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from gch.eta import eta_from_initial, integrate_eta
from gch.eulerian import EulerianGrid, integrate_eulerian, uniform_grid
from gch.lagrangian import GridSpec, auto_half_width, eval_u_at, forward_transform, reconstruct
from gch.model import GchParams, make_preset, peakon, sample_grid, steep, zero_data
from gch.nonlocal_terms import kernel_direct, kernel_scan
from gch.lagrangian import trapezoid_weights
from gch.semilinear import integrate
from gch.verify import balance_law_value, default_battery, trajectory_fields, weak_form_value

BASELINE = Path(__file__).parent / "data" / "regression_baseline.json"
MIN_RATIO = 1.6  # error ratio per refinement step that counts as (at least) first order


@pytest.fixture
def report(capsys):
    def _report(number, name, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:2d} [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"criterion {number} ({name}) failed: {detail}"
    return _report


def _ratios(errors):
    e = np.asarray(errors, dtype=float)
    return e[:-1] / e[1:]


def test_01_kernel_scan_matches_direct_sum(report):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for n in range(3, 65):
        for _ in range(100):
            Y = np.sort(rng.uniform(-5, 5, n))
            g = rng.uniform(0, 2, n) * np.cos(0.5 * rng.uniform(-4, 4, n)) ** 2
            c = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(Y) * (g[1:] + g[:-1]))))
            w = trapezoid_weights(Y)
            f = rng.normal(size=n)
            P, dP = kernel_scan(c, w, f)
            Pd, dPd = kernel_direct(c, w, f)
            worst = max(worst, np.max(np.abs(P - Pd)) / np.max(np.abs(Pd)),
                        np.max(np.abs(dP - dPd)) / max(np.max(np.abs(dPd)), 1e-300))
    elapsed = time.perf_counter() - start
    report(1, "kernel scan vs O(n^2) sum", worst <= 1e-12 and elapsed < 10.0,
           f"max rel diff {worst:.2e} (tol 1e-12), {elapsed:.2f}s (limit 10s)")


def test_02_conservative_energy(report, ch, gauss_data):
    start = time.perf_counter()
    L = auto_half_width(gauss_data, ch, 2.0)
    traj = integrate(forward_transform(gauss_data, GridSpec(4096, L)), ch, 2.0, 1e-3,
                     snapshot_every=100)
    E = np.array([r.E for r in traj.reports])
    drift = float(np.max(np.abs(E - E[0])) / E[0])
    elapsed = time.perf_counter() - start
    report(2, "conservative energy", drift <= 1e-6 and elapsed < 60.0,
           f"|E(T)-E(0)|/E(0) max {drift:.2e} (tol 1e-6), {elapsed:.1f}s (limit 60s)")


def test_03_energy_bound(report, gauss_data):
    worst = -math.inf
    for k, lam in [(0.5, 0.0), (0.0, 0.3), (0.5, 0.3), (0.0, -0.3)]:
        params = GchParams(1.0, 0.0, k, lam)
        L = auto_half_width(gauss_data, params, 1.0)
        traj = integrate(forward_transform(gauss_data, GridSpec(2048, L)), params, 1.0, 2e-3,
                         snapshot_every=5)
        E0 = traj.reports[0].E
        for r in traj.reports:
            bound = math.exp(2 * (abs(k) + abs(lam)) * r.T) * E0
            worst = max(worst, r.E / bound - 1.0)
    report(3, "energy bound", worst <= 1e-6, f"max E/bound - 1 = {worst:.2e} (tol 1e-6)")


def test_04_compatibility_first_order(report, ch, gauss_data):
    L = auto_half_width(gauss_data, ch, 1.0)
    defects = []
    for n in (1024, 2048, 4096):
        traj = integrate(forward_transform(gauss_data, GridSpec(n, L)), ch, 1.0, 2e-3,
                         snapshot_every=25)
        defects.append(max(s.compatibility_defect() for s in traj.states))
    r = _ratios(defects)
    report(4, "compatibility defect order", bool(np.all(r >= MIN_RATIO)),
           f"defects {['%.2e' % d for d in defects]}, ratios {np.round(r, 2).tolist()} (need >= {MIN_RATIO})")


def test_05_peakon_tracking(report, ch):
    data = peakon(sample_grid(40.0, 1e-3), c=1.0)
    L = auto_half_width(data, ch, 1.0)
    errors = []
    for n in (1024, 2048, 4096):
        final = integrate(forward_transform(data, GridSpec(n, L)), ch, 1.0, 2.5e-3).final
        f = reconstruct(final)
        errors.append(float(np.max(np.abs(f.u - np.exp(-np.abs(f.x - final.T))))))
    r = _ratios(errors)
    baseline = json.loads(BASELINE.read_text())["peakon_linf_error_n4096"]
    same = abs(errors[-1] - baseline) <= 1e-6 * baseline
    report(5, "peakon tracking", bool(np.all(r >= MIN_RATIO)) and same,
           f"errors {['%.3e' % e for e in errors]}, ratios {np.round(r, 2).tolist()}, "
           f"n=4096 error vs baseline {baseline:.6e}")


def test_06_cross_method_eulerian(report, ch, gauss_data):
    L = auto_half_width(gauss_data, ch, 0.5)
    dists = []
    for n, dx in ((1024, 1e-2), (2048, 5e-3), (4096, 2.5e-3)):
        f = reconstruct(integrate(forward_transform(gauss_data, GridSpec(n, L)), ch, 0.5, 1e-3).final)
        x = uniform_grid(20.0, dx)
        g = integrate_eulerian(EulerianGrid(0.0, x, gauss_data.value_at(x)), ch, 0.5)[-1]
        inside = np.abs(g.x) <= 15.0
        ul = eval_u_at(f, g.x[inside])
        dists.append(float(np.linalg.norm(ul - g.u[inside]) / np.linalg.norm(g.u[inside])))
    ok = dists[1] < 1e-2 and dists[2] < dists[1] < dists[0]
    report(6, "characteristic vs Eulerian", ok,
           f"relative L2 {['%.2e' % d for d in dists]} at n/dx = 1024/1e-2, 2048/5e-3, 4096/2.5e-3")


def test_07_uniqueness_cross_check(report, ch, gauss_data):
    L = auto_half_width(gauss_data, ch, 0.5)
    xq = np.linspace(-10, 10, 4001)
    dists = []
    for n in (1024, 2048):
        grid = GridSpec(n, L)
        a = reconstruct(integrate(forward_transform(gauss_data, grid), ch, 0.5, 1e-3).final)
        b = reconstruct(integrate_eta(eta_from_initial(gauss_data, grid), ch, 0.5, 1e-3).final)
        dists.append(float(np.max(np.abs(eval_u_at(a, xq) - eval_u_at(b, xq)))))
    ok = dists[1] < 1e-3 and dists[1] < dists[0]
    report(7, "Y-solver vs eta-solver", ok, f"Linf {['%.2e' % d for d in dists]} at n = 1024, 2048")


def _residual_study(params, data, levels):
    out = []
    battery = default_battery(1.0)
    for n, dt in levels:
        L = auto_half_width(data, params, 1.0)
        traj = integrate(forward_transform(data, GridSpec(n, L)), params, 1.0, dt, snapshot_every=1)
        F = trajectory_fields(traj)
        out.append((np.array([weak_form_value(traj, params, p, F) for p in battery]),
                    np.array([balance_law_value(traj, params, p, F) for p in battery]),
                    np.array([balance_law_value(traj, params, p, F, weighted=False) for p in battery])))
    return out


def test_08_weak_form_and_balance_law(report, ch, gauss_data):
    battery = default_battery(1.0)
    # zero solution: every residual is exactly zero
    zd = zero_data(sample_grid(30.0, 1e-2))
    zt = integrate(forward_transform(zd, GridSpec(257, 30.0)), ch, 1.0, 1e-2, snapshot_every=1)
    zeros = [weak_form_value(zt, ch, p) for p in battery] + [balance_law_value(zt, ch, p) for p in battery]
    zero_ok = all(z == 0.0 for z in zeros)
    levels = [(1024, 4e-3), (2048, 2e-3), (4096, 1e-3)]
    smooth = _residual_study(ch, gauss_data, levels)
    w_r = [np.abs(smooth[i][0]) / np.abs(smooth[i + 1][0]) for i in range(2)]
    b_r = [np.abs(smooth[i][1]) / np.abs(smooth[i + 1][1]) for i in range(2)]
    smooth_ok = all(np.all(r >= MIN_RATIO) for r in w_r + b_r)
    damped = make_preset("ch-dissipative", lam=0.3)
    st = _residual_study(damped, gauss_data, levels)
    wb_r = [np.abs(st[i][1]) / np.abs(st[i + 1][1]) for i in range(2)]
    weighted_ok = all(np.all(r >= MIN_RATIO) for r in wb_r)
    unweighted = np.array([np.max(np.abs(s[2])) for s in st])
    plateau_ok = (np.max(np.abs(np.diff(unweighted))) < 0.01 * unweighted[-1]
                  and unweighted[-1] > 100 * np.max(np.abs(st[-1][1])))
    report(8, "weak form and balance law", zero_ok and smooth_ok and weighted_ok and plateau_ok,
           f"zero exact={zero_ok}; smooth min ratios weak {min(r.min() for r in w_r):.2f} "
           f"balance {min(r.min() for r in b_r):.2f}; lam=0.3 weighted min ratio "
           f"{min(r.min() for r in wb_r):.2f}, unweighted plateau {['%.4e' % u for u in unweighted]}")


def test_09_breaking_run(report, ch):
    data = steep(sample_grid(30.0, 1e-3), amp=2.0)
    t_end = 5.0
    L = auto_half_width(data, ch, t_end)
    log = []
    integrate(forward_transform(data, GridSpec(4096, L)), ch, t_end, 2e-3,
              monitor=lambda s, r: log.append((s.T, float(np.min(s.xi * np.cos(0.5 * s.v) ** 2)), r.E,
                                               float(s.xi.min()),
                                               bool(np.all(np.isfinite(s.u)) and np.all(np.isfinite(s.v))))))
    T, minxY, E, minxi, finite = (np.array(c) for c in zip(*log))
    hit = np.nonzero(minxY < 1e-2)[0]
    t_star = float(T[hit[0]]) if hit.size else math.inf
    upto = T <= t_star + 0.5
    drift = float(np.max(np.abs(E[upto] - E[0])) / E[0]) if hit.size else math.inf
    ok = t_star <= 5.0 and bool(np.all(finite[upto])) and bool(np.all(minxi[upto] > 0)) and drift < 1e-4
    report(9, "breaking run", ok,
           f"T*={t_star:.3f}, min x_Y={minxY[upto].min():.2e}, min xi={minxi[upto].min():.3f}, "
           f"energy drift to T*+0.5 {drift:.2e} (tol 1e-4)")


def test_10_zero_data_stationary(report, ch):
    zd = zero_data(sample_grid(20.0, 1e-2))
    grid = GridSpec(513, 20.0)
    a = integrate(forward_transform(zd, grid), ch, 1.0, 1e-2)
    b = integrate_eta(eta_from_initial(zd, grid), ch, 1.0, 1e-2)
    x = uniform_grid(20.0, 5e-2)
    c = integrate_eulerian(EulerianGrid(0.0, x, zd.value_at(x)), ch, 1.0)
    worst = max(max(np.max(np.abs(s.u)) for s in a.states),
                max(np.max(np.abs(s.v)) for s in a.states),
                max(np.max(np.abs(s.xi - 1.0)) for s in a.states),
                max(np.max(np.abs(s.u)) for s in b.states),
                max(np.max(np.abs(s.v)) for s in b.states),
                max(np.max(np.abs(g.u)) for g in c),
                max(r.E for r in a.reports))
    report(10, "zero data stays zero", worst <= np.finfo(float).eps,
           f"max deviation {worst:.1e} across lagrangian, eta, eulerian")
