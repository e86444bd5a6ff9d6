"""Integro-ODE barrier U'' = a2 k U / (k I + b2), I' = U, U(0) = k^(-2/3), U'(0) = 0."""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import NumericalFailure
from .profile import BarrierProfile, ConstructionFailure
from .scan import empirical_threshold, ResidualReport

SAMPLES = 2048
RTOL = 1e-10
FIRST_INTEGRAL_TOL = 1e-6


def _rhs(a2, b2, k):
    def f(x, w):
        U, dU, I = w
        return [dU, a2 * k * U / (k * I + b2), U]
    return f


def solve_ode_barrier(a2, b2, k, x_end=None, rtol=RTOL):
    """Dense solution of the augmented system on [0, x_end] (default k^(-1/6)).

    Returns the scipy ``OdeSolution``; ``sol(x)`` gives rows (U, U', I).
    """
    x_end = k ** (-1.0 / 6.0) if x_end is None else x_end
    w0 = [k ** (-2.0 / 3.0), 0.0, 0.0]
    # absolute tolerance tied to the initial size of each component
    atol = [rtol * w0[0], rtol * w0[0] * k ** (1.0 / 3.0) * x_end + 1e-300, rtol * w0[0] * x_end]
    res = solve_ivp(_rhs(a2, b2, k), (0.0, x_end), w0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True)
    if not res.success:
        raise NumericalFailure(f"ode barrier integration failed: {res.message}")
    return res.sol


def ode_barrier(a2, b2, m, k, samples=SAMPLES, raise_on_failure=False):
    """Build and check the integro-ODE barrier on [0, k^(-1/6)].

    Checks: first-integral residual sup|U' - a2 log((kI + b2)/b2)| <= 1e-6,
    endpoint slope U'(k^(-1/6)) >= (a2/8) log k, pointwise k^(1/8) U' < U''
    and U'' <= a2 k U ((m-1) k I + b2^(m-1))^(-1/(m-1)).
    """
    if not (0 < a2 <= 1) or b2 < 1 or m < 2 or not k > 1:
        raise ValueError("need 0 < a2 <= 1, b2 >= 1, m >= 2, k > 1")
    x_end = k ** (-1.0 / 6.0)
    sol = solve_ode_barrier(a2, b2, k, x_end)
    y = np.linspace(0.0, x_end, samples)
    U, dU, I = sol(y)
    U[0], dU[0], I[0] = k ** (-2.0 / 3.0), 0.0, 0.0
    d2U = a2 * k * U / (k * I + b2)
    report = ResidualReport()
    first = dU - a2 * np.log1p(k * I / b2)
    fi = float(np.max(np.abs(first)))
    report.checks["first_integral"] = fi <= FIRST_INTEGRAL_TOL
    lk = np.log(k)
    report.checks["endpoint_slope"] = float(dU[-1]) >= a2 / 8 * lk
    # strict inequality: the residual must stay nonnegative
    report.add("k^(1/8)U'<U''", d2U - k ** 0.125 * dU, d2U, y, 0.0)
    bound = a2 * k * U * ((m - 1) * k * I + b2 ** (m - 1)) ** (-1.0 / (m - 1))
    report.add("U''<=bound", bound - d2U, d2U, y, 1e-12)
    prof = BarrierProfile(y, U, dU, [slice(0, samples)], "ode",
                          {"a2": a2, "b2": b2, "m": m, "k": k},
                          breakpoints={"0": 0.0, "k^-1/6": x_end}, report=report)
    prof.diagnostics.update({
        "first_integral_residual": fi, "endpoint_slope": float(dU[-1]),
        "slope_target": a2 / 8 * lk, "analytic_slope_bound": a2 * (np.log(k ** (1.0 / 6.0) + b2) - np.log(b2)),
        "d2U": d2U, "I": I, "dense": sol,
    })
    if raise_on_failure and not report.passed:
        raise ConstructionFailure("ode barrier conditions fail", report)
    return prof


def ode_threshold(a2, b2, m, exponents=range(1, 61)):
    """Empirical threshold K2 over powers of ten; returns (K, {k: passed})."""
    verdicts = {}
    for e in exponents:
        k = 10.0 ** e
        verdicts[k] = ode_barrier(a2, b2, m, k, samples=512).passed
    return empirical_threshold(verdicts), verdicts
