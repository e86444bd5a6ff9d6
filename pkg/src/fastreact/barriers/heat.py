"""Heat-flow barrier on the complement of supp v0 enlarged by a distance d.

The extended initial trace is imposed as fixed Dirichlet data on the
boundary of the enlarged region and as initial data inside it. A constant
offset (a multiple of eps1/4) is added until the barrier lies above the
limit heat solution u_inf on the complement.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Field, ProblemSpec, eval_initial_data, step_schedule
from ..diffusion import LinearStencil, monotone_dt
from ..errors import ConfigurationError
from .scan import ResidualReport

EXTENSIONS = ("even", "zero")
# differences of two heat solves below this (relative to max u0) are roundoff
ROUNDOFF = 1e-12


@dataclass(eq=False)
class HeatBarrier:
    """Space-time barrier values on the full grid; NaN outside the enlarged region."""

    grid: object
    times: np.ndarray
    values: np.ndarray
    region: np.ndarray
    d: float
    eps1: float
    offset: float
    extension: str
    report: ResidualReport = field(default_factory=ResidualReport)
    diagnostics: dict = field(default_factory=dict)
    tag: str = "enlarged-heat"

    @property
    def passed(self) -> bool:
        return self.report.passed


def reflect_across_interface(geometry, coords, h=1e-7):
    """Mirror image x - 2 rho(x) grad rho(x), with grad rho by central differences."""
    rho = geometry.signed_distance(*coords)
    grads = []
    for i in range(len(coords)):
        plus = list(coords)
        minus = list(coords)
        plus[i] = coords[i] + h
        minus[i] = coords[i] - h
        grads.append((geometry.signed_distance(*plus) - geometry.signed_distance(*minus)) / (2 * h))
    return tuple(c - 2 * rho * g for c, g in zip(coords, grads))


def _initial_u(spec: ProblemSpec, u0=None):
    """(nodal u0, callable u0); ``u0`` overrides the problem's expression on the complement."""
    if u0 is None:
        return eval_initial_data(spec)[0].values, spec.initial.u0
    coords = spec.grid.coords()
    outside = ~spec.geometry.in_support(spec.grid)
    vals = np.where(outside, np.asarray(u0(*coords), dtype=float) * np.ones(spec.grid.shape), 0.0)
    if vals.min() < 0:
        raise ConfigurationError("u0 must be nonnegative")
    return vals, u0


def extended_trace(spec: ProblemSpec, d, extension="even", u0=None):
    """u0 on the complement, extended into the band -d < rho <= 0 and beyond.

    ``even`` mirrors u0 across the interface and clamps at 0; ``zero`` uses 0.
    """
    if extension not in EXTENSIONS:
        raise ConfigurationError(f"extension must be one of {EXTENSIONS}")
    values, func = _initial_u(spec, u0)
    coords = spec.grid.coords()
    rho = spec.geometry.signed_distance(*coords)
    out = values.copy()
    if extension == "even":
        band = rho <= 0
        mirrored = func(*reflect_across_interface(spec.geometry, [c[band] for c in coords]))
        out[band] = np.maximum(np.asarray(mirrored, dtype=float) * np.ones(int(band.sum())), 0.0)
    return out


def enlarged_heat_barrier(d, eps1, spec: ProblemSpec, dt=None, output_times=None, extension="even", u0=None):
    """Build the enlarged heat barrier and report both sandwich inequalities.

    The sandwich ``u_inf <= barrier <= u_inf + eps1`` is checked on the
    complement of supp v0 at every time step, not only at ``output_times``.
    ``u0`` (a callable of the coordinates) replaces the problem's initial u,
    which also admits data the problem definition rejects, such as u0 = 0.
    """
    if not d > 0 or not eps1 > 0:
        raise ConfigurationError("d and eps1 must be positive")
    grid = spec.grid
    reach = spec.geometry.reach(grid.extents)
    if not d < reach:
        raise ConfigurationError(f"d={d} must be below the geometry reach {reach:.6g}")
    dt = monotone_dt(grid) if dt is None else float(dt)
    output_times = [0.0, spec.T] if output_times is None else [float(t) for t in output_times]
    coords = grid.coords()
    rho = spec.geometry.signed_distance(*coords)
    region = rho > -d
    complement = ~spec.geometry.in_support(grid)
    u0_values, _ = _initial_u(spec, u0)
    trace = extended_trace(spec, d, extension, u0)

    big = LinearStencil(grid, dirichlet=~region)
    small = LinearStencil(grid, dirichlet=~complement)
    scale = max(u0_values.max(), 1.0)
    # (gap, (time, flat index)); both solves advance together so every step is scanned
    worst = {"below": (0.0, None), "above": (-np.inf, None)}

    def track(t, diff):
        lo, hi = np.nanargmin(diff), np.nanargmax(diff)
        if -diff.flat[lo] > worst["below"][0]:
            worst["below"] = (-float(diff.flat[lo]), (t, int(lo)))
        if diff.flat[hi] > worst["above"][0]:
            worst["above"] = (float(diff.flat[hi]), (t, int(hi)))

    u_inf = u0_values.copy()
    u_hat = trace.copy()
    track(0.0, np.where(complement, u_hat - u_inf, np.nan))
    times, snaps = [], []
    t = 0.0
    for step, out in step_schedule(spec.T, dt, output_times):
        if step > 0:
            u_inf = small.step(u_inf, step)
            u_hat = big.step(u_hat, step, boundary=trace)
            t += step
            track(t, np.where(complement, u_hat - u_inf, np.nan))
        if out is not None:
            times.append(output_times[out])
            snaps.append((u_hat.copy(), u_inf.copy()))

    deficit = worst["below"][0]
    quarter = eps1 / 4
    offset = 0.0 if deficit <= ROUNDOFF * scale else quarter * np.ceil(deficit / quarter)
    excess = worst["above"][0] + offset
    report = ResidualReport()
    report.checks["lower_sandwich"] = bool(deficit - offset <= ROUNDOFF * scale)
    report.checks["upper_sandwich"] = bool(excess <= eps1)
    report.checks["nonnegative"] = bool(min(float(s[0][region].min()) for s in snaps) + offset >= 0)
    flat = [c.ravel() for c in coords]
    for name, (val, where) in worst.items():
        if where is not None:
            t, idx = where
            report.notes.append(f"largest gap {name} u_inf: {val:.4g} at x={tuple(float(c[idx]) for c in flat)}, t={t:.6g}")
    values = np.array([np.where(region, s[0] + offset, np.nan) for s in snaps])
    u_inf_snaps = np.array([s[1] for s in snaps])
    return HeatBarrier(grid, np.array(times), values, region, float(d), float(eps1), float(offset), extension,
                       report, {"deficit": deficit, "excess": excess, "dt": dt, "u_inf": u_inf_snaps,
                                "trace": trace})


def offsets_for(ds, eps1, spec, **kw):
    """Offset needed for each d in ``ds`` (expected nonincreasing as d shrinks)."""
    return {float(d): enlarged_heat_barrier(d, eps1, spec, **kw).offset for d in ds}


def search_d(ds, eps1, spec, **kw):
    """First d in ``ds`` (try larger ones first) whose barrier passes both sandwich bounds.

    Returns ``(d, barrier)``; ``(None, last barrier)`` when every d fails.
    """
    last = None
    for d in sorted(ds, reverse=True):
        last = enlarged_heat_barrier(d, eps1, spec, **kw)
        if last.passed:
            return float(d), last
    return None, last
