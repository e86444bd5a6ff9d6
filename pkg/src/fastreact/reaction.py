"""Pointwise reaction kernels and a high-accuracy ODE oracle.

With diffusion removed the system at one node is

    du/dt = -k u v,        dv/dt = -k u^m3 v^m4.

Writing J = k * int u^m3 dt turns the v equation into dv/dJ = -v^m4,
which has the closed-form solution implemented by :func:`v_exact_update`.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NumericalFailure

# m4 closer than this to 1 uses the exponential branch
M4_SEAM = 1e-12


def _check_nonneg(**kw):
    for name, val in kw.items():
        arr = np.asarray(val)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise DomainError(f"{name} must be nonnegative")


def v_exact_update(v, dJ, m4):
    """Exact solution of dv/dJ = -v^m4 after an increment ``dJ``.

    Works elementwise on arrays. ``v = 0`` stays 0; the result lies in [0, v].
    """
    _check_nonneg(v=v, dJ=dJ)
    if m4 < 1:
        raise DomainError("m4 must be >= 1")
    v = np.asarray(v, dtype=float)
    dJ = np.asarray(dJ, dtype=float)
    if abs(m4 - 1.0) <= M4_SEAM:
        out = v * np.exp(-dJ)
    else:
        p = m4 - 1.0
        with np.errstate(divide="ignore", over="ignore"):
            # v^(-p) overflows to inf for tiny v, which correctly yields 0
            base = np.power(v, -p) + p * dJ
            out = np.where(v > 0, np.power(base, -1.0 / p), 0.0)
        out = np.minimum(out, v)
    return out if out.ndim else float(out)


def u_exact_update(u, v, k, dt):
    """Exact solution of du/dt = -k u v with v frozen over ``dt``."""
    _check_nonneg(u=u, v=v, k=k, dt=dt)
    out = np.asarray(u, dtype=float) * np.exp(-k * np.asarray(v, dtype=float) * dt)
    return out if out.ndim else float(out)


def reaction_substep(u, v, k, m3, m4, h, ordering="uvu"):
    """Second-order symmetric reaction flow over a substep of length ``h``.

    ``ordering="uvu"`` (default): frozen-v u update over h/2, exact v update
    with the midpoint increment J = k h u^m3, then u over h/2 again.
    ``ordering="vuv"``: the v increment uses the trapezoid rule on u^m3,
    half applied before the u update and half after.
    Both orderings are monotone in the comparison sense.
    """
    if ordering == "uvu":
        u1 = u_exact_update(u, v, k, 0.5 * h)
        v1 = v_exact_update(v, k * h * np.power(u1, m3), m4)
        return u_exact_update(u1, v1, k, 0.5 * h), v1
    if ordering == "vuv":
        v1 = v_exact_update(v, 0.5 * k * h * np.power(u, m3), m4)
        u1 = u_exact_update(u, v1, k, h)
        return u1, v_exact_update(v1, 0.5 * k * h * np.power(u1, m3), m4)
    raise ValueError(f"unknown ordering {ordering!r}")


def point_ode_oracle(u0, v0, k, m3, m4, t, rtol=1e-10, max_steps=200_000):
    """Integrate the diffusion-free pointwise system to time ``t`` (or times).

    Uses an explicit 8th-order Runge-Kutta method with tight tolerances.
    Returns ``(u, v)``; arrays when ``t`` is a sequence.
    """
    _check_nonneg(u0=u0, v0=v0, k=k)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise DomainError("t must be nonnegative")
    scalar = np.ndim(t) == 0
    if u0 == 0 or v0 == 0 or ts.max() == 0:
        u = np.full(ts.shape, float(u0))
        v = np.full(ts.shape, float(v0))
        return (u[0], v[0]) if scalar else (u, v)

    def rhs(_, y):
        u, v = np.maximum(y, 0.0)
        return [-k * u * v, -k * u**m3 * v**m4]

    order = np.argsort(ts)
    sol = solve_ivp(rhs, (0.0, ts.max()), [u0, v0], method="DOP853", t_eval=ts[order],
                    rtol=rtol, atol=rtol * 1e-4 * max(u0, v0))
    if not sol.success or sol.nfev > 12 * max_steps:
        raise NumericalFailure(f"point ODE oracle failed: {sol.message}")
    u = np.empty_like(ts)
    v = np.empty_like(ts)
    u[order] = np.maximum(sol.y[0], 0.0)
    v[order] = np.maximum(sol.y[1], 0.0)
    return (u[0], v[0]) if scalar else (u, v)
