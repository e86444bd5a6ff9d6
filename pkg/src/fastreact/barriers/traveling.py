"""Traveling-frame supersolution (U, V) on [0, y_hat].

In the moving variable y = x + s t the barrier inequalities become

    (mo1)  -a3 |U'| - U'' + k U V >= 0
    (mo2)  s V' + k U^m3 V^m4 <= 0
    (mo3)  U(0) > k^-2, U(1/k) = k^-2, U'(1/k) = 0, V(0) = b3
    (mo4)  U(y_hat) > c3

U is the pointwise minimum of a shifted cosh piece, an optional shifted
integro-ODE piece (m3 = 1) and a concave quadratic cap; V is rebuilt from U.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from ..errors import ConfigurationError
from ..reaction import M4_SEAM
from .cosh import cosh_barrier
from .ode import ode_barrier, solve_ode_barrier
from .patch import CoshPiece, OdePiece, QuadraticPiece, patch_min
from .profile import BarrierProfile, ConstructionFailure
from .patch import _gl_increments
from .scan import ResidualReport, empirical_threshold, residual_scan

SAMPLES = 64
TOL = 1e-8


def v1_lower_bound(s, b3, m4):
    """Lower bound of V1 on the cosh piece: b3 e^(-1/s), or its power form for m4 > 1."""
    if abs(m4 - 1) <= M4_SEAM:
        return b3 * np.exp(-1.0 / s)
    return ((m4 - 1) / s + b3 ** (1 - m4)) ** (-1.0 / (m4 - 1))


def ode_parameters(s, b3, m4):
    """(a2, b2) for the m3 = 1 case."""
    a2 = s ** (1.0 / (m4 - 1)) / 2
    b2 = ((m4 - 1) / s + b3 ** (1 - m4)) ** (1.0 / (m4 - 1))
    return a2, b2


def _root(f, lo, hi, what):
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise _Unbracketed(f"{what}: root not bracketed on [{lo:.6g}, {hi:.6g}]")
    return bisect(f, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=4000)


class _Unbracketed(Exception):
    pass


def _cap_reach(cap, a3):
    """Leftmost point of the cap's own validity window.

    The cap stays positive and satisfies (mo1) with V = 0 as long as
    U' <= 2 L^(3/4) / a3; both limits are closed-form in t = y - origin.
    """
    disc = cap.c1**2 + 4 * cap.c2 * cap.base
    t_pos = -2 * cap.base / (cap.c1 + np.sqrt(disc))  # negative root, cancellation-free
    t_mo1 = (cap.c1 - 2 * cap.c2 / a3) / (2 * cap.c2)
    return cap.origin + 0.999 * max(t_pos, t_mo1)


def _window_start(right, left, lo, hi):
    """Start the right piece's window where it exceeds the left piece the most."""
    D = lambda y: float(right.U(y)) - float(left.U(y))
    res = minimize_scalar(lambda y: -D(y), bounds=(lo, hi), method="bounded",
                          options={"xatol": (hi - lo) * 1e-10})
    best = max([lo, hi, float(res.x)], key=D)
    return best, D(best)


def traveling_supersolution(s, a3, b3, c3, m3, m4, k, gamma=None, threshold="corrected",
                            samples=SAMPLES, raise_on_failure=False):
    """Build (U, V) and scan (mo1)-(mo4) plus the monotonicity pattern.

    ``gamma`` defaults to half of :func:`v1_lower_bound`.  Unbracketed
    breakpoints or a failed patch give a report that does not pass (or raise
    ConstructionFailure with ``raise_on_failure``).
    """
    if not 0 < s < 0.5:
        raise ConfigurationError("need 0 < s < 1/2")
    if min(a3, b3, c3) <= 0:
        raise ConfigurationError("a3, b3, c3 must be positive")
    if m3 < 1 or m4 < 1 or not (m3 > 1 or m4 >= 2):
        raise ConfigurationError("need m3, m4 >= 1 with m3 > 1 or m4 >= 2")
    gamma = 0.5 * v1_lower_bound(s, b3, m4) if gamma is None else gamma
    if not gamma > 0:
        raise ConfigurationError("gamma must be positive")
    k = float(k)
    L = np.log(k)
    params = {"s": s, "a3": a3, "b3": b3, "c3": c3, "m3": m3, "m4": m4, "k": k, "gamma": gamma, "a1": gamma}
    report = ResidualReport()
    diag = {}
    cosh_part = cosh_barrier(gamma, m3, k, threshold=threshold)
    diag["cosh_piece_passed"] = cosh_part.passed
    v_rule = {"k": k, "s": s, "m3": m3, "m4": m4, "v0": b3}

    def failed(msg):
        report.checks["construction"] = False
        report.notes.append(msg)
        prof = BarrierProfile(np.array([]), np.array([]), np.array([]), [], "traveling", params,
                              report=report, diagnostics=diag)
        if raise_on_failure:
            raise ConstructionFailure(msg, report)
        return prof

    if "x_tilde" not in cosh_part.diagnostics:
        return failed("x_tilde for the cosh piece does not exist (k below threshold)")
    xt = cosh_part.diagnostics["x_tilde"]
    y1 = xt + 1.0 / k
    bp = {"x_tilde": xt, "y1": y1, "1/k": 1.0 / k}
    P1 = CoshPiece(gamma, k, 1.0 / k, 0.0, y1, v_rule=v_rule, name="U1")
    try:
        if m3 > 1:
            pieces, yhat = _power_case(P1, L, k, a3, y1, bp, diag)
        else:
            a2, b2 = ode_parameters(s, b3, m4)
            params.update({"a2": a2, "b2": b2})
            pieces, yhat = _ode_case(P1, L, k, s, a3, b3, m4, a2, b2, y1, bp, diag)
    except _Unbracketed as exc:
        return failed(str(exc))
    try:
        prof = patch_min(pieces, samples=samples, v_rule=v_rule, params=params)
    except ConfigurationError as exc:
        return failed(f"patch failed: {exc}")
    prof.tag = "traveling"
    prof.breakpoints.update(bp)
    prof.breakpoints["y_hat"] = yhat
    prof.diagnostics.update(diag)
    report = prof.report
    report.checks["construction"] = True
    _scan(prof, pieces, a3, b3, c3, m3, m4, k, s, yhat, L)
    if raise_on_failure and not report.passed:
        raise ConstructionFailure("traveling supersolution inequalities fail", report)
    return prof


def _power_case(P1, L, k, a3, y1, bp, diag):
    y2 = _root(lambda y: float(P1.values(y)[1]) - L / 2, 1.0 / k, y1, "y2 (U1' = log(k)/2)")
    yhat = y2 + L ** -0.25
    P2 = QuadraticPiece(L, y2, float(P1.U(y2)), y2 - 1.0 / k, yhat, name="U2")
    lo = max(min(_cap_reach(P2, a3), y2 - 1.0 / k), 0.0)
    w, gap = _window_start(P2, P1, lo, min(y1, yhat))
    if not gap > 0:
        raise _Unbracketed("the cap never exceeds U1 on their overlap")
    P2.a = w
    bp.update({"y2": y2, "U2.window": w})
    diag["junction_slope_strict"] = bool(float(P1.values(y2)[1]) > float(P2.values(y2)[1]))
    return [P1, P2], yhat


def _ode_case(P1, L, k, s, a3, b3, m4, a2, b2, y1, bp, diag):
    sol = solve_ode_barrier(a2, b2, k)
    x_end = k ** (-1.0 / 6.0)
    diag["ode_piece_passed"] = ode_barrier(a2, b2, m4, k, samples=512).passed
    k23 = k ** (-2.0 / 3.0)

    def V3(x):
        _, _, I = sol(np.atleast_1d(x))
        return s ** (1.0 / (m4 - 1)) * ((m4 - 1) * k * I + (m4 - 1) / s + b3 ** (1 - m4)) ** (-1.0 / (m4 - 1))

    y3 = _root(lambda y: float(P1.U(y)) - k23, 1.0 / k, y1, "y3 (U1 = k^(-2/3))")
    y5 = 0.5 / k
    target = float(sol(y5)[0])
    f4 = lambda y: float(P1.U(y)) - target
    y4 = y3 if f4(y3) >= 0 else _root(f4, y3, y1, "y4 (U1(y4) = U3(y5))")
    shift = y4 - y5
    P3 = OdePiece(sol, shift, shift, shift + x_end, a2, b2, k, V3=V3, name="U3")
    target6 = a2 / 16 * L
    x6 = _root(lambda x: float(sol(x)[1]) - target6, 0.0, x_end, "y6 (U3' = (a2/16) log k)")
    y6 = x6 + shift
    yhat = y6 + L ** -0.25
    P4 = QuadraticPiece(L, y6, float(sol(x6)[0]), y6 - 1.0 / k, yhat, name="U4")
    lo = max(min(_cap_reach(P4, a3), y6 - 1.0 / k), P3.a)
    w, gap = _window_start(P4, P3, lo, min(P3.b, yhat))
    if not gap > 0:
        raise _Unbracketed("the cap never exceeds U3 on their overlap")
    P4.a = w
    V1_y4 = float(P1.V(np.array([y4]))[0])
    diag["junction_y4"] = {"slope": bool(float(P1.values(y4)[1]) > float(sol(y5)[1])),
                           "V": bool(V1_y4 > float(V3(y5)[0]))}
    diag["junction_slope_strict"] = bool(target6 > 4 * np.sqrt(L))
    bp.update({"y3": y3, "y4": y4, "y5": y5, "y6": y6, "U4.window": w})
    return [P1, P3, P4], yhat


def _scan(prof, pieces, a3, b3, c3, m3, m4, k, s, yhat, L):
    report = prof.report
    y, U, V = prof.y, prof.U, prof.V
    residual_scan(prof, {
        "mo1": lambda q: (-a3 * np.abs(q["dU"]) - q["d2U"] + k * q["U"] * q["V"],
                          np.abs(k * q["U"] * q["V"]) + np.abs(q["d2U"]) + a3 * np.abs(q["dU"])),
    }, tol=TOL, report=report)
    # mo2: V' = -V^m4 J' by the chain rule, J' = (k/s) times the mean of U^m3 over a
    # short window around each sample (a direct quadrature, no differences of J)
    dJ = _local_rate(prof, pieces, m3) * (k / s)
    Vm = V ** m4
    report.add("mo2", Vm * (s * dJ - k * U**m3), k * U**m3 * Vm, y, TOL)
    P1 = pieces[0]
    U_1k, dU_1k = (float(v) for v in P1.values(1.0 / k))
    report.checks["mo3"] = bool(U_1k == k ** -2.0 and dU_1k == 0.0 and float(P1.excess(0.0)) > 0
                                and V[0] == b3 and prof.index[np.searchsorted(y, 1.0 / k)] == 0)
    U_hat = float(pieces[int(prof.index[-1])].U(yhat))
    report.checks["mo4"] = bool(U_hat > c3)
    report.checks["y_hat_bound"] = bool(yhat < 2 * L ** -0.25)
    inner = (y > 0) & (y < 1.0 / k)
    outer = (y > 1.0 / k) & (y <= yhat)
    report.checks["monotone"] = bool(np.all(prof.dU[inner] < 0) and np.all(prof.dU[outer] > 0))
    report.checks["V_nonnegative_nonincreasing"] = bool(np.all(V >= 0) and np.all(np.diff(V) <= 0))
    prof.diagnostics.update({"U(y_hat)": U_hat, "target_3logk^1/4": 3 * L ** 0.25, "log_k": L})


def _local_rate(prof, pieces, m3, rel=1e-7):
    """Mean of U^m3 over [y - h, y + h] (one-sided at segment ends), h = rel * sample step."""
    y = prof.y
    out = np.empty(len(y))
    for seg in prof.segments:
        yy = y[seg]
        piece = pieces[int(prof.index[seg][-1])]
        h = rel * (yy[-1] - yy[0]) / (len(yy) - 1)
        lo = np.maximum(yy - h, yy[0])
        hi = np.minimum(yy + h, yy[-1])
        pts = np.empty(2 * len(yy))
        pts[0::2], pts[1::2] = lo, hi
        inc = _gl_increments(piece, pts, m3)[0::2]
        out[seg] = inc / (hi - lo)
    return out


def traveling_threshold(s, a3, b3, c3, m3, m4, exponents=range(1, 31), **kw):
    """Empirical threshold K3 over powers of ten; returns ``(K, {k: passed})``."""
    verdicts = {}
    for e in exponents:
        k = 10.0 ** e
        verdicts[k] = traveling_supersolution(s, a3, b3, c3, m3, m4, k, **kw).passed
    return empirical_threshold(verdicts), verdicts
