"""Comparison checks, k-sweeps, interface tracking and barrier dominance."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Field, Grid, IntervalSupport, ProblemSpec, Trajectory, eval_initial_data
from .diffusion import heat_reference_solve
from .errors import ConfigurationError, DomainError
from .simulator import DEFAULT_C, choose_dt, evolve, run

RATIO_BAND = (5.0, 20.0)
LOWER_TOL = 1e-8


@dataclass
class CheckReport:
    """Outcome of a nodewise ordering check: worst margin (>= -tol passes) and where it occurs."""

    name: str
    passed: bool
    worst_margin: float
    location: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: worst margin {self.worst_margin:.4g} at {self.location}"

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "worst_margin": self.worst_margin,
                "location": self.location, "details": self.details}


def _locate(grid: Grid, times, flat_index):
    """(time, coordinates) of a flat index into a (times, *grid.shape) array."""
    it, node = np.unravel_index(flat_index, (len(times), grid.size))
    coords = [float(c.ravel()[node]) for c in grid.coords()]
    return {"t": float(times[it]), "x": coords}


def _same_frame(a: Trajectory, b: Trajectory):
    if a.grid.shape != b.grid.shape or not np.allclose(a.grid.extents, b.grid.extents):
        raise ConfigurationError("trajectories live on different grids")
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise ConfigurationError("trajectories have different snapshot times")


def comparison_check(upper: Trajectory, lower: Trajectory, tol=1e-10) -> CheckReport:
    """u >= u~ - tol and v <= v~ + tol at every node and snapshot.

    ``upper`` is the pair expected to carry the larger u (and smaller v).
    """
    _same_frame(upper, lower)
    margins = [upper.u - lower.u]
    if upper.v is not None and lower.v is not None:
        margins.append(lower.v - upper.v)
    worst = np.minimum.reduce([m.ravel() for m in margins]) if len(margins) > 1 else margins[0].ravel()
    i = int(np.argmin(worst))
    which = "u" if len(margins) == 1 or margins[0].ravel()[i] <= margins[1].ravel()[i] else "v"
    loc = _locate(upper.grid, upper.times, i)
    loc["component"] = which
    return CheckReport("comparison", bool(worst[i] >= -tol), float(worst[i]), loc, {"tol": tol})


def random_ordered_pairs(grid: Grid, n=20, seed=0, modes=4):
    """``n`` seeded pairs ((u, v), (u~, v~)) of smooth nonnegative data with u >= u~, v <= v~."""
    rng = np.random.default_rng(seed)
    coords = grid.coords()
    L = [hi - lo for lo, hi in grid.extents]

    def smooth():
        f = np.zeros(grid.shape)
        for _ in range(modes):
            term = rng.normal() / (1 + rng.integers(0, 3))
            for c, (lo, _), length in zip(coords, grid.extents, L):
                term = term * np.cos(rng.integers(0, 6) * np.pi * (c - lo) / length)
            f = f + term
        f = f - f.min()
        return f / max(f.max(), 1e-300)

    pairs = []
    for _ in range(n):
        u_lo = rng.uniform(0.2, 1.0) * smooth()
        u_hi = u_lo + rng.uniform(0.0, 0.5) * smooth()
        v_hi = rng.uniform(0.2, 1.0) * smooth()
        v_lo = v_hi * rng.uniform(0.0, 1.0) * smooth()
        pairs.append(((u_hi, v_lo), (u_lo, v_hi)))
    return pairs


def ordered_pair_study(grid: Grid, k, m3, m4, T, n=20, seed=0, dt=None, tol=1e-10, output_times=None):
    """Run every ordered pair through the simulator with one dt; returns the list of reports."""
    dt = choose_dt(grid, k, 1.0) if dt is None else dt
    output_times = np.linspace(0.0, T, 6) if output_times is None else output_times
    reports = []
    for (u_hi, v_lo), (u_lo, v_hi) in random_ordered_pairs(grid, n, seed):
        a = evolve(grid, u_hi, v_lo, k, m3, m4, T, dt, output_times)
        b = evolve(grid, u_lo, v_hi, k, m3, m4, T, dt, output_times)
        reports.append(comparison_check(a, b, tol))
    return reports


def interface_position(v: Field, theta, geometry: IntervalSupport, window=None):
    """Level crossings of v = theta next to each interior interface point (1-D only).

    Returns ``{interface point: crossing or None}``; None means no crossing was
    found within ``window`` of the point (the interface was absorbed).
    """
    grid = v.grid
    if grid.dim != 1:
        raise DomainError("interface tracking is implemented for 1-D grids")
    if not theta > 0:
        raise ConfigurationError("theta must be positive")
    x = grid.axes[0]
    vals = v.values
    points = geometry.boundary_points(grid.extents)
    window = 0.5 * geometry.reach(grid.extents) if window is None else window
    g = vals - theta
    cross = np.flatnonzero(np.signbit(g[:-1]) != np.signbit(g[1:]))
    # linear interpolation between the bracketing nodes
    xc = x[cross] - g[cross] * (x[cross + 1] - x[cross]) / (g[cross + 1] - g[cross])
    out = {}
    for p in points:
        near = np.abs(xc - p) <= window
        out[float(p)] = float(xc[near][np.argmin(np.abs(xc[near] - p))]) if near.any() else None
    return out


def interface_displacement(traj: Trajectory, theta, geometry):
    """Largest distance of each crossing from its t=0 position over all snapshots (inf if absorbed)."""
    first = interface_position(traj.snapshot(0)[1], theta, geometry)
    worst = {p: 0.0 for p in first}
    for i in range(len(traj)):
        pos = interface_position(traj.snapshot(i)[1], theta, geometry)
        for p, xc in pos.items():
            if xc is None or first[p] is None:
                worst[p] = np.inf
            else:
                worst[p] = max(worst[p], abs(xc - first[p]))
    return worst


@dataclass
class ConvergenceReport:
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)

    COLUMNS = ("k", "sup_u_err", "v_deficit", "interface_disp", "dt", "h")

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    def ratios(self, name="v_deficit"):
        vals = self.column(name)
        with np.errstate(divide="ignore", invalid="ignore"):
            return vals[:-1] / vals[1:]

    def to_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow(["%.17g" % r[c] for c in self.COLUMNS])

    def to_dict(self):
        return {"rows": self.rows, "checks": self.checks, "meta": self.meta, "detail": self.detail}

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")


def _mask_from_intervals(grid: Grid, intervals):
    x = grid.axes[0]
    mask = np.zeros(grid.shape, dtype=bool)
    for a, b in intervals:
        mask |= (x >= a) & (x <= b)
    return mask


def k_sweep(spec: ProblemSpec, k_list, omega_prime, output_times=None, dt=None, theta=None):
    """Simulate each k in ``k_list`` and compare with the limit heat flow.

    ``omega_prime`` is a list of intervals (1-D) or a boolean node mask; it
    must sit at least two cells inside supp v0.  ``dt=None`` uses the
    smallest policy step over the sweep for every run, so all runs share one
    time grid.  Sup norms are taken over the snapshots at ``output_times``.
    """
    ks = [float(k) for k in k_list]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ConfigurationError("k_list must be increasing")
    grid = spec.grid
    u0, v0 = eval_initial_data(spec)
    mask = np.asarray(omega_prime, dtype=bool) if isinstance(omega_prime, np.ndarray) else \
        _mask_from_intervals(grid, omega_prime)
    rho = spec.geometry.signed_distance(*grid.coords())
    if not mask.any() or np.any(rho[mask] > -2 * grid.hmin * (1 - 1e-9)):
        raise ConfigurationError("omega_prime must lie at least two cells inside supp v0")
    c = spec.solver.get("c", DEFAULT_C)
    if dt is None:
        dt = min(choose_dt(grid, k, v0.max(), c) for k in ks)
    output_times = np.linspace(0.0, spec.T, 101) if output_times is None else np.asarray(output_times, float)
    ref = heat_reference_solve(u0, spec.geometry, spec.T, dt, output_times)
    theta = 0.5 * float(v0.values[v0.values > 0].min()) if theta is None else theta
    supp = spec.geometry.in_support(grid)
    report = ConvergenceReport(meta={"dt": dt, "h": grid.hmin, "T": spec.T, "theta": theta,
                                     "spec": spec.to_dict(), "output_times": list(map(float, output_times))})
    lower_ok, sanity_ok = True, True
    for k in ks:
        traj = run(spec.with_(k=k, solver={**spec.solver, "dt": dt}), output_times)
        err = np.abs(traj.u - ref.u)
        sup_err = float(err.max())
        deficit = float(np.max(v0.values[mask] - traj.v[:, mask]))
        lower = float(np.min(traj.u - ref.u))
        lower_ok &= lower >= -LOWER_TOL
        sanity_ok &= sup_err >= float(traj.u[:, supp].max())
        disp = np.inf
        if grid.dim == 1:
            disp = max(interface_displacement(traj, theta, spec.geometry).values())
        report.rows.append({"k": k, "sup_u_err": sup_err, "v_deficit": deficit, "interface_disp": float(disp),
                            "dt": dt, "h": grid.hmin})
        at = _locate(grid, traj.times, int(np.argmax(err)))
        report.detail[f"{k:g}"] = {"sup_err_location": at, "min_u_minus_u_inf": lower,
                                   "sup_err_per_snapshot": err.reshape(len(traj), -1).max(axis=1).tolist(),
                                   "steps": traj.meta["steps"]}
    sup = report.column("sup_u_err")
    deficits = report.column("v_deficit")
    ratios = report.ratios() if len(ks) > 1 else np.array([])
    report.checks["sup_error_strictly_decreasing"] = bool(np.all(np.diff(sup) < 0))
    report.checks["u_k>=u_inf-1e-8"] = bool(lower_ok)
    report.checks["v_deficit_ratios_in_band"] = bool(np.all((ratios >= RATIO_BAND[0]) & (ratios <= RATIO_BAND[1])))
    report.checks["interface_disp<=2h_at_largest_k"] = bool(report.rows[-1]["interface_disp"] <= 2 * grid.hmin)
    report.checks["sup_error>=u_k_on_support"] = bool(sanity_ok)
    report.meta["v_deficit_nonincreasing"] = bool(np.all(np.diff(deficits) <= 0))
    report.meta["v_deficit_ratios"] = ratios.tolist()
    return report


@dataclass
class SpaceTimeBarrier:
    """Plain (times, U, V) snapshots; scalars broadcast over the grid."""

    times: np.ndarray
    U: object
    V: object
    region: np.ndarray | None = None


def dominance_check(traj: Trajectory, barrier, tol=1e-8) -> CheckReport:
    """u_k <= U + tol and v_k >= V - tol at every node and snapshot inside the barrier's region.

    ``barrier`` needs ``times``, ``U`` and ``V`` (arrays shaped like the
    trajectory's snapshots, or scalars) and may carry a boolean ``region``.
    """
    times = np.asarray(barrier.times, dtype=float)
    if len(times) != len(traj.times) or not np.allclose(times, traj.times, rtol=0, atol=1e-12):
        raise ConfigurationError("barrier and trajectory snapshot times differ")
    shape = traj.u.shape
    try:
        U = np.broadcast_to(np.asarray(barrier.U, dtype=float), shape)
        V = np.broadcast_to(np.asarray(barrier.V, dtype=float), shape)
    except ValueError as exc:
        raise ConfigurationError(f"barrier does not cover the trajectory grid: {exc}") from None
    region = getattr(barrier, "region", None)
    inside = np.ones(shape, dtype=bool) if region is None else np.broadcast_to(np.asarray(region, bool), shape)
    mu = np.where(inside, U - traj.u, np.inf)
    mv = np.where(inside, traj.v - V, np.inf) if traj.v is not None else np.full(shape, np.inf)
    worst = np.minimum(mu, mv).ravel()
    i = int(np.argmin(worst))
    loc = _locate(traj.grid, traj.times, i)
    loc["component"] = "u" if mu.ravel()[i] <= mv.ravel()[i] else "v"
    details = {"tol": tol, "worst_u": float(mu.min()), "worst_v": float(mv.min())}
    return CheckReport("dominance", bool(worst[i] >= -tol), float(worst[i]), loc, details)
