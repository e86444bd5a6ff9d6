"""Acceptance criteria 1-9, one test each, at the stated tolerances.

Every test prints a ``criterion N: PASS|FAIL`` line (also collected in the
terminal summary) before asserting.
"""
import numpy as np
import pytest

from fastreact.analysis import dominance_check, k_sweep, ordered_pair_study, SpaceTimeBarrier
from fastreact.barriers import (assemble_global_supersolution, assembly_threshold, cosh_barrier, cosh_threshold,
                                ode_barrier, traveling_supersolution, traveling_threshold)
from fastreact.barriers.scan import empirical_threshold
from fastreact.config import DEFAULT_SEED
from fastreact.core import build_grid, disk_problem, eval_initial_data, p1_problem
from fastreact.diffusion import LinearStencil, heat_reference_solve, monotone_dt
from fastreact.reaction import point_ode_oracle
from fastreact.simulator import choose_dt, run, strang_step

RATE_BAND = (3.4, 4.6)


def _split_error(k, m3, m4, dt, T=1.0):
    """Largest |split - oracle| over all steps for the diffusion-free system from (1, 1)."""
    n = int(round(T / dt))
    ou, ov = point_ode_oracle(1.0, 1.0, k, m3, m4, np.arange(1, n + 1) * dt, rtol=1e-12)
    u, v = np.array([1.0]), np.array([1.0])
    err = 0.0
    for i in range(n):
        u, v = strang_step(u, v, dt, k, m3, m4, None)
        err = max(err, abs(u[0] - ou[i]), abs(v[0] - ov[i]))
    return err


def test_criterion_1_splitting_matches_point_oracle(verdict):
    worst, ratios = 0.0, []
    for k in (1.0, 10.0, 100.0):
        for m3 in (1, 2):
            for m4 in (1, 2, 3):
                e1 = _split_error(k, m3, m4, 1e-3)
                e2 = _split_error(k, m3, m4, 5e-4)
                worst = max(worst, e1)
                ratios.append(e1 / e2)
    ok = worst <= 5e-4 and all(RATE_BAND[0] <= r <= RATE_BAND[1] for r in ratios)
    verdict(1, ok, f"max error {worst:.3e} (<= 5e-4), halving ratios in [{min(ratios):.3f}, {max(ratios):.3f}]")
    assert ok


def _eigenmode_error(points, dt, T=0.05):
    spec = p1_problem(points=points)
    u0, _ = eval_initial_data(spec)
    ref = heat_reference_solve(u0, spec.geometry, T, dt, [T])
    x = spec.grid.axes[0]
    exact = np.where(np.abs(x) < 0.3, np.exp(-(np.pi / 0.6) ** 2 * T) * np.cos(np.pi * x / 0.6), 0.0)
    return float(np.abs(ref.u[-1] - exact).max())


def test_criterion_2_heat_reference_eigenmode(verdict):
    coarse = _eigenmode_error(801, 1e-5)
    # h halved, dt quartered: both space and time errors drop by 4
    fine = _eigenmode_error(1601, 2.5e-6)
    ratio = coarse / fine
    ok = coarse <= 1e-3 and RATE_BAND[0] <= ratio <= RATE_BAND[1]
    verdict(2, ok, f"sup error {coarse:.3e} (<= 1e-3), refinement ratio {ratio:.3f}")
    assert ok


def test_criterion_3_comparison_preserved_by_simulator(verdict):
    grid = build_grid((-1.0, 1.0), 201)
    reports = ordered_pair_study(grid, k=1e3, m3=2, m4=1, T=0.05, n=20, seed=DEFAULT_SEED, tol=1e-10)
    worst = min(r.worst_margin for r in reports)
    ok = len(reports) == 20 and all(r.passed for r in reports)
    verdict(3, ok, f"20 seeded ordered pairs, worst margin {worst:.3e} (>= -1e-10)")
    assert ok


def _stepwise_invariants(spec):
    """Step a spec by hand and collect the per-step invariant margins."""
    u0, v0 = eval_initial_data(spec)
    grid = spec.grid
    w = grid.cell_weights()
    stencil = LinearStencil(grid)
    dt = choose_dt(grid, spec.k, v0.max())
    u, v = u0.values.copy(), v0.values.copy()
    mass = [float((w * u).sum())]
    v_rise, u_low, u_high = 0.0, 0.0, 0.0
    for _ in range(int(np.ceil(spec.T / dt))):
        u_new, v_new = strang_step(u, v, dt, spec.k, spec.m3, spec.m4, stencil)
        v_rise = max(v_rise, float((v_new - v).max()))
        u_low = min(u_low, float(u_new.min()))
        u_high = max(u_high, float(u_new.max()) - u0.max())
        mass.append(float((w * u_new).sum()))
        u, v = u_new, v_new
    return v_rise, u_low, u_high, float(np.diff(mass).max()), mass[0]


def _free_mass_drift(spec, steps=400):
    u0, _ = eval_initial_data(spec)
    grid = spec.grid
    w = grid.cell_weights()
    stencil = LinearStencil(grid)
    dt = monotone_dt(grid)
    u, v = u0.values.copy(), np.zeros(grid.shape)
    m0 = float((w * u).sum())
    drift = 0.0
    for _ in range(steps):
        u, v = strang_step(u, v, dt, spec.k, spec.m3, spec.m4, stencil)
        drift = max(drift, abs(float((w * u).sum()) - m0) / m0)
    return drift


def test_criterion_4_structural_invariants(verdict):
    specs = [p1_problem(k=1e4, m3=2, m4=1, points=201), p1_problem(k=1e4, m3=1, m4=2, points=201),
             p1_problem(k=1e2, m3=1, m4=3, points=201), disk_problem(k=1e3, points=41, T=0.02)]
    lines, ok = [], True
    for spec in specs:
        v_rise, u_low, u_high, mass_rise, m0 = _stepwise_invariants(spec)
        drift = _free_mass_drift(spec)
        # mass may only move up by double rounding of the weighted sum
        good = v_rise <= 0.0 and u_low >= 0.0 and u_high <= 1e-10 and mass_rise <= 1e-14 * m0 and drift <= 1e-12
        ok &= good
        lines.append(f"dim={spec.grid.dim} k={spec.k:g} ({spec.m3:g},{spec.m4:g}): max v rise {v_rise:.1e}, "
                     f"min u {u_low:.1e}, u over max u0 {u_high:.1e}, max mass rise {mass_rise:.1e}, "
                     f"v=0 mass drift {drift:.1e}")
    verdict(4, ok, "; ".join(lines))
    assert ok


def test_criterion_5_cosh_barrier(verdict):
    quartic = cosh_barrier(1.0, 4, 1e10)
    x_exact = np.arccosh(1e10 ** 1.75) / np.sqrt(1e10)
    strong = cosh_barrier(1.0, 1, 1e13)
    weak = cosh_barrier(1.0, 1, 1e9)
    K4, _ = cosh_threshold(1.0, 4)
    K1, _ = cosh_threshold(1.0, 1)
    value = weak.diagnostics["integral_bound"]
    ok = (quartic.report.checks["x_tilde_window"] and quartic.report.checks["integral_lt_1"]
          and quartic.report.checks["slope_ge_log_k"]
          and abs(quartic.diagnostics["x_tilde"] - x_exact) <= 1e-12 * x_exact
          and strong.report.checks["integral_bound_lt_1"] and strong.report.checks["integral_lt_1"]
          and not weak.report.checks["integral_bound_lt_1"] and abs(value - 2.7) <= 0.3)
    verdict(5, ok, f"m=4 k=1e10: x_tilde={quartic.diagnostics['x_tilde']:.4e}, all three conditions "
                   f"{quartic.passed}; m=1: integral estimate {strong.diagnostics['integral_bound']:.3f} at 1e13, "
                   f"{value:.3f} at 1e9 (quadrature {weak.diagnostics['integral']:.3g}); "
                   f"thresholds K(m=4)={K4:g}, K(m=1)={K1:g}")
    assert ok


def test_criterion_6_ode_barrier(verdict):
    residuals = {k: ode_barrier(0.5, 1.0, 2, k).diagnostics["first_integral_residual"] for k in (1e4, 1e6, 1e8)}
    slopes = {k: ode_barrier(0.5, 1.0, 2, k) for k in (1e6, 1e8, 1e10)}
    slope_ok = all(p.diagnostics["endpoint_slope"] >= 0.5 / 8 * np.log(k) for k, p in slopes.items())
    verdicts = {10.0 ** e: ode_barrier(0.5, 1.0, 2, 10.0 ** e, samples=512).report["k^(1/8)U'<U''"].passed
                for e in range(1, 61)}
    K = empirical_threshold(verdicts)
    ok = max(residuals.values()) <= 1e-6 and slope_ok
    verdict(6, ok, f"first-integral residuals {', '.join(f'{r:.2e}' for r in residuals.values())}; "
                   f"endpoint slope condition at k>=1e6: {slope_ok}; "
                   f"k^(1/8)U'<U'' empirical threshold (recorded only): {K if K is None else f'{K:g}'}")
    assert ok


def _traveling_case(m3, m4):
    K, verdicts = traveling_threshold(0.1, 1.0, 2.0, 2.0, m3, m4, exponents=range(1, 25))
    if K is None:
        rep = traveling_supersolution(0.1, 1.0, 2.0, 2.0, m3, m4, 1e24).report
        failing = [line for line in rep.lines() if line.startswith("FAIL")] + rep.notes[:2]
        return False, f"({m3},{m4}): no passing k up to 1e24; at 1e24: {'; '.join(failing)}"
    prof = traveling_supersolution(0.1, 1.0, 2.0, 2.0, m3, m4, K)
    rep = prof.report
    ok = (rep["mo1"].min_normalized >= -1e-8 and rep["mo2"].min_normalized >= -1e-8
          and rep.checks.get("mo3") and rep.checks.get("mo4") and rep.checks.get("monotone") and rep.passed)
    return bool(ok), f"({m3},{m4}): K={K:g}, {'; '.join(rep.lines())}"


def test_criterion_7_traveling_supersolution(verdict):
    results = [_traveling_case(2, 1), _traveling_case(1, 2)]
    # beyond the stated range, for the record
    wide = {c: traveling_threshold(0.1, 1.0, 2.0, 2.0, *c, exponents=range(1, 61))[0] for c in ((2, 1), (1, 2))}
    ok = all(r[0] for r in results)
    verdict(7, ok, " | ".join(r[1] for r in results)
            + f" | thresholds over 1e1..1e60: {', '.join(f'{c}: {K}' for c, K in wide.items())}")
    assert ok


P1_OMEGA = [(-0.9, -0.45), (0.45, 0.9)]


@pytest.mark.slow
@pytest.mark.parametrize("m3,m4", [(2, 1), (1, 2)])
def test_criterion_8_k_sweep(verdict, m3, m4):
    spec = p1_problem(m3=m3, m4=m4, T=0.1, points=801)
    report = k_sweep(spec, [1e2, 1e3, 1e4, 1e5], P1_OMEGA)
    rows = ", ".join(f"k={r['k']:g}: err {r['sup_u_err']:.4g} deficit {r['v_deficit']:.3g} "
                     f"disp {r['interface_disp']:.2g}" for r in report.rows)
    checks = ", ".join(f"{name} {'ok' if v else 'FAILED'}" for name, v in report.checks.items())
    ratios = ", ".join(f"{r:.3g}" for r in report.meta["v_deficit_ratios"])
    verdict(8, report.passed, f"({m3},{m4}) {rows}; deficit ratios [{ratios}]; {checks}")
    assert report.passed


@pytest.mark.slow
def test_criterion_9_global_supersolution_dominates(verdict):
    base = p1_problem(m3=2, m4=1, T=0.1, points=801)
    d, eps = 0.1, 0.2
    K, _ = assembly_threshold(base, d)
    assert K is not None, "traveling piece never constructs"
    dt = monotone_dt(base.grid)
    times = np.linspace(0.0, base.T, 11)
    barrier = assemble_global_supersolution(base, d, eps, k=K, dt=dt, output_times=times)
    fresh = run(base.with_(k=K, solver={"dt": dt}), times)
    dom = dominance_check(fresh, barrier, tol=1e-8)
    dom_lin = dominance_check(fresh, SpaceTimeBarrier(barrier.times, barrier.U, barrier.V_linear), tol=1e-8)
    ok = barrier.passed and dom.passed and dom_lin.passed
    verdict(9, ok, f"k={K:g}: assembly checks {'pass' if barrier.passed else 'FAIL'}; "
                   f"worst u margin {dom.details['worst_u']:.3g}, worst v margin {dom.details['worst_v']:.3g}; "
                   f"linear-integral V variant {'dominated' if dom_lin.passed else 'NOT dominated'}")
    assert ok
