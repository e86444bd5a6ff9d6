"""Global space-time supersolution built from three barriers.

    U1 = heat barrier on the d-enlarged complement + eps/2      (V1 = 0)
    U2 = traveling profile at y = rho(x) + s t + 3d/4, 0 <= y <= y_hat
    U3 = (k^-2 + min(U2(0), 3 k^-2)) / 2 deep inside supp v0     (V3 decays)

U is the pointwise minimum (lowest index on ties).  V starts from the V of
the piece that is active at t = 0 and is then advanced by the exact reaction
kernel with the time integral of U^m3 (or of U, for the second variant).
Comparisons near k^-2 are made on the excess over k^-2, which doubles
cannot resolve otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ProblemSpec, eval_initial_data, step_schedule
from ..diffusion import LinearStencil, monotone_dt
from ..errors import ConfigurationError
from ..reaction import v_exact_update
from .heat import enlarged_heat_barrier, extended_trace
from .patch import evaluate_min
from .profile import ConstructionFailure
from .scan import ResidualReport, empirical_threshold
from .traveling import traveling_supersolution

B3_RULES = ("corrected", "literal")
VARIANTS = ("power", "linear")


def traveling_speed(d, T):
    return min(0.25, d / (8 * T))


def v_floor(spec: ProblemSpec, d):
    """min(1, min of v0 at nodes at least d/2 inside supp v0)."""
    _, v0 = eval_initial_data(spec)
    rho = spec.geometry.signed_distance(*spec.grid.coords())
    deep = rho <= -d / 2
    if not deep.any():
        raise ConfigurationError(f"no grid node lies {d / 2:g} inside supp v0")
    return float(min(1.0, v0.values[deep].min()))


def assembly_parameters(spec: ProblemSpec, d, b3_rule="corrected"):
    """(s, a3, b3, c3, v_floor) for the traveling piece.

    ``corrected`` takes b3 = v_floor/2 so that the traveling V starts below
    v0; ``literal`` takes b3 = 2/v_floor.
    """
    if b3_rule not in B3_RULES:
        raise ConfigurationError(f"b3_rule must be one of {B3_RULES}")
    u0, _ = eval_initial_data(spec)
    vd = v_floor(spec, d)
    s = traveling_speed(d, spec.T)
    a3 = spec.geometry.curvature_bound(d) + 1.0
    b3 = vd / 2 if b3_rule == "corrected" else 2 / vd
    c3 = 1.0 + u0.max()
    return s, a3, b3, c3, vd


@dataclass(eq=False)
class GlobalBarrier:
    """Snapshots of (U, V) on the simulation grid plus the active-piece index (1, 2, 3)."""

    grid: object
    times: np.ndarray
    U: np.ndarray
    V: np.ndarray
    V_linear: np.ndarray
    index: np.ndarray
    k: float
    params: dict
    report: ResidualReport
    traveling: object = None
    heat: object = None
    diagnostics: dict = field(default_factory=dict)
    tag: str = "global"

    @property
    def passed(self) -> bool:
        return self.report.passed


def assembly_threshold(spec: ProblemSpec, d, exponents=range(1, 41), b3_rule="corrected"):
    """Empirical threshold of the traveling piece with the assembly's parameters."""
    s, a3, b3, c3, _ = assembly_parameters(spec, d, b3_rule)
    verdicts = {}
    for e in exponents:
        k = 10.0 ** e
        verdicts[k] = traveling_supersolution(s, a3, b3, c3, spec.m3, spec.m4, k).passed
    return empirical_threshold(verdicts), verdicts


def assemble_global_supersolution(spec: ProblemSpec, d, eps, k=None, dt=None, output_times=None,
                                  extension="even", b3_rule="corrected", exponents=range(1, 41),
                                  raise_on_failure=False):
    """Assemble (U, V) on the grid of ``spec`` and check the orderings it relies on.

    ``k`` defaults to the empirical threshold of the traveling piece.  Time
    steps follow the heat barrier (monotone cap unless ``dt`` is given) and
    land on ``output_times``.
    """
    if not d > 0 or not eps > 0:
        raise ConfigurationError("d and eps must be positive")
    if not spec.exponents_admissible:
        raise ConfigurationError("need m3 > 1 or m4 >= 2")
    s, a3, b3, c3, vd = assembly_parameters(spec, d, b3_rule)
    verdicts = None
    if k is None:
        k, verdicts = assembly_threshold(spec, d, exponents, b3_rule)
        if k is None:
            raise ConstructionFailure("traveling piece does not construct on the scanned k range")
    k = float(k)
    m3, m4, T = spec.m3, spec.m4, spec.T
    prof = traveling_supersolution(s, a3, b3, c3, m3, m4, k)
    if not prof.report.checks.get("construction", False):
        raise ConstructionFailure(f"traveling piece fails at k={k:g}", prof.report)
    grid = spec.grid
    dt = monotone_dt(grid) if dt is None else float(dt)
    output_times = [0.0, T] if output_times is None else [float(t) for t in output_times]
    heat = enlarged_heat_barrier(d, eps / 2, spec, dt=dt, output_times=output_times, extension=extension)

    k2 = k ** -2.0
    pieces = prof.pieces
    P1 = pieces[0]
    E2_0 = float(P1.excess(0.0))
    E3 = 0.5 * min(E2_0, 2 * k2)
    U3 = k2 + E3
    yhat = prof.breakpoints["y_hat"]
    J_prof = prof.diagnostics["J"]
    y_prof = prof.y

    rho = grid.coords()
    rho = spec.geometry.signed_distance(*rho)
    region1 = rho > -d
    trace = extended_trace(spec, d, extension)
    big = LinearStencil(grid, dirichlet=~region1)
    u0, v0 = eval_initial_data(spec)
    h = grid.hmin

    def pieces_at(t, u_hat):
        """Values and excesses of (U1, U2, U3) at time t; inf where undefined."""
        U1 = np.where(region1, u_hat + heat.offset + eps / 2, np.inf)
        y = rho + s * t + 0.75 * d
        U2, E2, _ = evaluate_min(pieces, np.clip(y, 0.0, yhat), floor=k2)
        in2 = (y >= 0) & (y <= yhat)
        U2 = np.where(in2, U2, np.inf)
        E2 = np.where(in2, E2, np.inf)
        in3 = y <= 1.0 / k
        U3a = np.where(in3, U3, np.inf)
        E = np.stack([U1 - k2, E2, np.where(in3, E3, np.inf)])
        return np.stack([U1, U2, U3a]), E, y

    def V2_at(y):
        J = np.interp(y, y_prof, J_prof)
        return v_exact_update(b3, J, m4)

    report = ResidualReport()
    notes = report.notes
    # scalar orderings from the construction
    report.checks["U3<=2k^-2<eps/2"] = bool(E3 <= k2 and 2 * k2 < eps / 2)
    report.checks["U3<U2 at y=0"] = bool(0 < E3 < E2_0)
    report.checks["U2=k^-2<U3 at y=1/k"] = bool(float(P1.excess(1.0 / k)) == 0.0 and E3 > 0)
    report.checks["U2(y_hat)>=c3"] = bool(prof.diagnostics["U(y_hat)"] >= c3)
    V3_min = vd * np.exp(-(2.0 ** (m3 + 1)) * T / k)
    V2_1k = float(V2_at(1.0 / k))
    report.checks["V3>=V2(1/k)>=0"] = bool(V3_min >= V2_1k >= 0)

    # start values: V of the piece active at t = 0
    u_hat = trace.copy()
    vals, E, y = pieces_at(0.0, u_hat)
    idx = np.argmin(E, axis=0)
    if not np.all(np.isfinite(np.min(E, axis=0))):
        raise ConfigurationError("the three barrier regions do not cover the grid")
    V_start = np.select([idx == 0, idx == 1, idx == 2], [0.0, V2_at(np.clip(y, 0, yhat)), vd])
    Ucur = np.take_along_axis(vals, idx[None], 0)[0]
    report.checks["initial_U>=u0"] = bool(np.all(Ucur >= u0.values))
    report.checks["initial_V<=v0"] = bool(np.all(V_start <= v0.values))
    if not report.checks["initial_V<=v0"]:
        bad = np.argmax(V_start - v0.values)
        notes.append(f"V(x,0) exceeds v0 by {float((V_start - v0.values).flat[bad]):.3g} at node {int(bad)}")

    I_pow = np.zeros(grid.shape)
    I_lin = np.zeros(grid.shape)
    gaps = {"U1_boundary": np.inf, "U2_y_hat": np.inf}
    lin_res = -np.inf
    U1_below_c3 = True
    times, Us, Vs, VLs, idxs = [], [], [], [], []
    t = 0.0

    def layer_gaps(vals, E, y):
        nonlocal U1_below_c3
        # U1 inactive within 2h of the edge of its region (rho = -d)
        near = region1 & (rho <= -d + 2 * h)
        if near.any():
            other = np.minimum(E[1], E[2])[near]
            gaps["U1_boundary"] = min(gaps["U1_boundary"], float(np.min(E[0][near] - other)))
        # U2 inactive within 2h of y_hat, where U1 < c3 <= U2
        near = (y >= yhat - 2 * h) & (y <= yhat)
        if near.any():
            other = np.minimum(E[0], E[2])[near]
            gaps["U2_y_hat"] = min(gaps["U2_y_hat"], float(np.min(E[1][near] - other)))
            U1_below_c3 = U1_below_c3 and bool(np.all(vals[0][near & region1] < c3))

    layer_gaps(vals, E, y)
    Uprev = Ucur
    for step, out in step_schedule(T, dt, output_times):
        if step > 0:
            u_hat = big.step(u_hat, step, boundary=trace)
            t += step
            vals, E, y = pieces_at(t, u_hat)
            idx = np.argmin(E, axis=0)
            Ucur = np.take_along_axis(vals, idx[None], 0)[0]
            I_pow += 0.5 * step * (Uprev**m3 + Ucur**m3)
            I_lin += 0.5 * step * (Uprev + Ucur)
            Uprev = Ucur
            layer_gaps(vals, E, y)
            if m3 != 1:
                Vl = v_exact_update(V_start, k * I_lin, m4)
                # d/dt of the U-integral variant: -k U V^m4, so the residual is k V^m4 (U^m3 - U)
                with np.errstate(over="ignore", invalid="ignore"):
                    r = k * Vl**m4 * (Ucur**m3 - Ucur) / np.maximum(k * Ucur**m3 * Vl**m4, 1e-300)
                r = np.where(Vl > 0, r, 0.0)
                lin_res = max(lin_res, float(np.nanmax(r)))
        if out is not None:
            times.append(output_times[out])
            Us.append(Ucur.copy())
            Vs.append(v_exact_update(V_start, k * I_pow, m4))
            VLs.append(v_exact_update(V_start, k * I_lin, m4))
            idxs.append(idx + 1)
    report.checks["U1_inactive_near_its_edge"] = bool(gaps["U1_boundary"] > 0)
    report.checks["U2_inactive_near_y_hat"] = bool(gaps["U2_y_hat"] > 0)
    report.checks["U1<c3 near y_hat"] = U1_below_c3
    lin_ok = m3 == 1 or lin_res <= 1e-8
    report.checks["V_inequality_linear"] = bool(lin_ok)
    if not lin_ok:
        notes.append(f"U-integral variant of V violates the v-inequality (normalized {lin_res:.3g}); "
                     "it needs U <= 1 wherever V > 0")
    for name, g in gaps.items():
        if not g > 0:
            notes.append(f"no gap at {name}: {g:.3g}")
    params = {"d": d, "eps": eps, "s": s, "a3": a3, "b3": b3, "c3": c3, "v_floor": vd, "k": k,
              "m3": m3, "m4": m4, "T": T, "dt": dt, "extension": extension, "b3_rule": b3_rule,
              "U3": U3, "U3_excess": E3}
    # the U^m3 variant satisfies the v-inequality with equality by construction (exact kernel)
    diag = {"gaps": gaps, "linear_variant_residual": lin_res, "heat_sandwich": heat.report.checks,
            "heat_offset": heat.offset, "traveling_passed": prof.passed, "threshold_verdicts": verdicts,
            "V3_min": V3_min, "V2(1/k)": V2_1k}
    report.checks["traveling"] = prof.passed
    out = GlobalBarrier(grid, np.array(times), np.array(Us), np.array(Vs), np.array(VLs), np.array(idxs),
                        k, params, report, prof, heat, diag)
    if raise_on_failure and not report.passed:
        raise ConstructionFailure("global assembly checks fail", report)
    return out
