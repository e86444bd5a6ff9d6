"""Hyperbolic-cosine barrier U(x) = k^-2 cosh(sqrt(a1 k) x)."""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .profile import BarrierProfile, ConstructionFailure
from .scan import empirical_threshold, ResidualReport, residual_scan, uniform_segments

SAMPLES = 64
Z_PIECE = 1.0
_LOG2 = np.log(2.0)


def logcosh(z):
    z = np.abs(np.asarray(z, dtype=float))
    return z + np.log1p(np.exp(-2 * z)) - _LOG2


def logsinh(z):
    """log sinh(z) for z > 0."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        big = z + np.log1p(-np.exp(-2 * z)) - _LOG2
        small = np.log(np.sinh(np.minimum(z, 20.0)))
    return np.where(z > 20.0, big, small)


def acosh_from_log(logX):
    """arccosh(exp(logX)) without forming exp(logX)."""
    if logX < 0:
        return np.nan
    if logX > 20:
        return logX + np.log1p(np.sqrt(-np.expm1(-2 * logX)))
    return float(np.arccosh(np.exp(logX)))


def cosh_excess(x, a1, k):
    """U(x) - k^-2 = k^-2 * 2 sinh^2(z/2), accurate for small z."""
    z = np.sqrt(a1 * k) * np.asarray(x, dtype=float)
    half = np.abs(z) / 2
    lk2 = -2 * np.log(k)
    small = 2 * np.sinh(np.minimum(half, 20.0)) ** 2 * np.exp(lk2)
    big = np.exp(2 * logsinh(np.maximum(half, 20.0)) + _LOG2 + lk2)
    return np.where(half < 20.0, small, big)


def cosh_values(x, a1, k):
    """U, U', U'' of k^-2 cosh(sqrt(a1 k) x), evaluated in log space."""
    sq = np.sqrt(a1 * k)
    z = sq * np.asarray(x, dtype=float)
    lk = np.log(k)
    lc = logcosh(z)
    with np.errstate(over="ignore"):
        # k^-2 * cosh(z) directly while it cannot overflow, so U(0) = k^-2 exactly
        U = np.where(lc < 600.0, k**-2.0 * np.exp(np.minimum(lc, 600.0)), np.exp(lc - 2 * lk))
        dU = np.sign(z) * np.exp(logsinh(np.abs(z)) - 2 * lk + np.log(sq))
        dU = np.where(z == 0, 0.0, dU)
        return U, dU, a1 * k * U


def threshold_value_log(m, k, threshold="corrected"):
    """log U(x_tilde) prescribed for the cosh barrier.

    ``corrected``: k^(-1/(2 sqrt m)) for m > 1. ``literal``: k^(-sqrt(m)/2).
    For m = 1 both give 2 k^(-2/3).
    """
    lk = np.log(k)
    if m == 1:
        return _LOG2 - 2.0 * lk / 3.0
    if threshold == "corrected":
        return -lk / (2 * np.sqrt(m))
    if threshold == "literal":
        return -0.5 * np.sqrt(m) * lk
    raise ValueError(f"unknown threshold reading {threshold!r}")


def cosh_integral(a1, m, k, lo, hi):
    """k * int_lo^hi U^m ds by adaptive quadrature in the scaled variable."""
    sq = np.sqrt(a1 * k)
    za, zb = sq * lo, sq * hi
    peak = m * max(logcosh(za), logcosh(zb))
    f = lambda z: np.exp(m * logcosh(z) - peak)
    pts = [za, 0.0, zb] if za < 0 < zb else [za, zb]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=500)
        total += val
    return float(np.exp(np.log(total) + peak + (1 - 2 * m) * np.log(k) - np.log(sq)))


def integral_bound(a1, m, k):
    """Closed-form upper estimate for the integral used in the existence argument."""
    lk = np.log(k)
    if m == 1:
        return 2 * np.log(4 * k**2) / np.sqrt(a1) * k ** (-1.0 / 6.0)
    return 2 * np.log(2 * k**2) / np.sqrt(a1) * np.exp((0.5 - 0.5 * np.sqrt(m)) * lk)


def _local_samples(y, segs, a1, k):
    """Per-segment ``(g, scale)`` with U = const + scale * g and g of order one.

    The flat piece [-1/k, 0] uses the excess over k^-2; the others use
    cosh(z) / cosh(z_c) with z_c the segment midpoint.
    """
    sq = np.sqrt(a1 * k)
    out = []
    for i, sl in enumerate(segs):
        # rebuild z from the index so node jitter in y does not enter the differences
        n = sl.stop - sl.start
        za, zb = sq * y[sl.start], sq * y[sl.stop - 1]
        z = za + (zb - za) * np.arange(n) / (n - 1)
        if i == 0:
            out.append((2 * np.sinh(z / 2) ** 2, k ** -2.0))
            continue
        zc = 0.5 * (z[0] + z[-1])
        g = (np.exp(z - zc) + np.exp(-z - zc)) / (1 + np.exp(-2 * zc))
        out.append((g, float(np.exp(logcosh(zc) - 2 * np.log(k)))))
    return out


def cosh_barrier(a1, m, k, threshold="corrected", samples=SAMPLES, raise_on_failure=False):
    """Build and certify the cosh barrier on [-1/k, x_tilde].

    The report's checks are the three conclusions: x_tilde inside
    (1/k, k^(-1/3)), k int U^m < 1, and U'(x_tilde) >= log k (m > 1) or
    U(x_tilde) >= 2 k^(-2/3) (m = 1).  The integral condition is checked twice:
    by quadrature and through its closed-form upper estimate.
    """
    if not a1 > 0 or m < 1 or not k > 1:
        raise ValueError("need a1 > 0, m >= 1, k > 1")
    lk = np.log(k)
    sq = np.sqrt(a1 * k)
    logUt = threshold_value_log(m, k, threshold)
    zt = acosh_from_log(logUt + 2 * lk)
    report = ResidualReport()
    params = {"a1": a1, "m": m, "k": k, "threshold": threshold}
    if not np.isfinite(zt) or zt <= 0:
        report.checks["x_tilde_bracketed"] = False
        report.notes.append("U(x_tilde) target lies below U(0) = k^-2; no x_tilde exists")
        if raise_on_failure:
            raise ConstructionFailure("x_tilde not bracketed", report)
        return BarrierProfile(np.array([]), np.array([]), np.array([]), [], "cosh", params, report=report)
    xt = zt / sq
    # pieces of width Z_PIECE in z keep one-sided stencils accurate near x_tilde
    edges = np.concatenate([[-1.0 / k], np.linspace(0.0, xt, int(np.ceil(zt / Z_PIECE)) + 1)])
    y, segs = uniform_segments(edges, samples)
    U, dU, _ = cosh_values(y, a1, k)
    Ut, dUt, _ = cosh_values(xt, a1, k)
    integral = cosh_integral(a1, m, k, -1.0 / k, xt)
    report.checks["x_tilde_window"] = bool(1.0 / k < xt < k ** (-1.0 / 3.0))
    report.checks["integral_lt_1"] = integral < 1.0
    # the closed-form estimate 2 x_tilde k U(x_tilde)^m bound used to prove the integral condition
    report.checks["integral_bound_lt_1"] = float(integral_bound(a1, m, k)) < 1.0
    if m > 1:
        report.checks["slope_ge_log_k"] = float(dUt) >= lk
    else:
        report.checks["size_ge_2k^-2/3"] = float(Ut) >= 2 * k ** (-2.0 / 3.0) * (1 - 1e-12)
    prof = BarrierProfile(y, U, dU, segs, "cosh", params,
                          breakpoints={"-1/k": -1.0 / k, "0": 0.0, "x_tilde": xt}, report=report,
                          U_local=_local_samples(y, segs, a1, k))
    residual_scan(prof, {
        "U''=a1kU": lambda q: (-np.abs(q["d2U"] - a1 * k * q["U"]), a1 * k * q["U"]),
        "U''>sqrt(a1k)|U'|": lambda q: (q["d2U"] - sq * np.abs(q["dU"]), a1 * k * q["U"]),
    }, tol=1e-8, report=report)
    prof.diagnostics.update({
        "x_tilde": xt, "U(x_tilde)": float(Ut), "dU(x_tilde)": float(dUt), "integral": integral,
        "integral_bound": float(integral_bound(a1, m, k)), "log_k": lk,
        "U(0)": float(cosh_values(0.0, a1, k)[0]), "dU(0)": float(cosh_values(0.0, a1, k)[1]),
    })
    if raise_on_failure and not report.passed:
        raise ConstructionFailure("cosh barrier conditions fail", report)
    return prof


def cosh_threshold(a1, m, exponents=range(1, 31), threshold="corrected"):
    """Empirical threshold K1 over powers of ten; returns ``(K, {k: passed})``.

    K is None when the largest tested k fails.
    """
    verdicts = {}
    for e in exponents:
        k = 10.0 ** e
        verdicts[k] = cosh_barrier(a1, m, k, threshold=threshold).passed
    return empirical_threshold(verdicts), verdicts
