"""Discrete certification of differential inequalities on sampled profiles.

Derivatives come from 7-point Lagrange stencils restricted to one segment
(an index range with uniform spacing), so no stencil crosses a breakpoint.
Every inequality is written as ``residual >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import ConfigurationError

MIN_SAMPLES = 32
STENCIL = 7


class InsufficientSampling(ConfigurationError):
    pass


@lru_cache(maxsize=None)
def _weights(offsets: tuple[int, ...]):
    """First and second derivative weights at 0 for unit-spaced ``offsets``.

    Built exactly in rationals from the Lagrange basis, then rounded once.
    """
    w1, w2 = [], []
    for j, zj in enumerate(offsets):
        poly, denom = [Fraction(1)], Fraction(1)
        for m, zm in enumerate(offsets):
            if m == j:
                continue
            # poly *= (x - zm)
            poly = [(poly[i - 1] if i else 0) - zm * (poly[i] if i < len(poly) else 0)
                    for i in range(len(poly) + 1)]
            denom *= zj - zm
        w1.append(float(poly[1] / denom))
        w2.append(float(2 * poly[2] / denom))
    return np.array(w1), np.array(w2)


def segment_derivatives(y, f):
    """First and second derivatives of samples ``f`` on a uniform segment ``y``.

    Weights act on differences from the evaluated node, so constants drop out
    exactly and roundoff does not scale with the size of ``f``.
    """
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    n = len(y)
    if n < max(STENCIL, MIN_SAMPLES):
        raise InsufficientSampling(
            f"segment has {n} samples; at least {MIN_SAMPLES} are needed (raise samples per piece)")
    step = (y[-1] - y[0]) / (n - 1)
    if step <= 0 or not np.allclose(np.diff(y), step, rtol=1e-6, atol=0):
        raise InsufficientSampling("segment samples must be uniformly spaced and increasing")
    half = STENCIL // 2
    d1 = np.empty(n)
    d2 = np.empty(n)
    w1, w2 = _weights(tuple(range(-half, half + 1)))
    inner = slice(half, n - half)
    cols = np.lib.stride_tricks.sliding_window_view(f, STENCIL)
    cols = cols - f[inner, None]
    d1[inner] = cols @ w1 / step
    d2[inner] = cols @ w2 / step**2
    for i in list(range(half)) + list(range(n - half, n)):
        start = min(max(i - half, 0), n - STENCIL)
        a1, a2 = _weights(tuple(range(start - i, start - i + STENCIL)))
        window = f[start:start + STENCIL] - f[i]
        d1[i] = window @ a1 / step
        d2[i] = window @ a2 / step**2
    return d1, d2


def piecewise_derivatives(y, f, segments: Sequence[slice]):
    d1 = np.full(len(y), np.nan)
    d2 = np.full(len(y), np.nan)
    for seg in segments:
        a, b = segment_derivatives(y[seg], f[seg])
        d1[seg] = a
        d2[seg] = b
    return d1, d2


@dataclass
class InequalityResult:
    name: str
    min_residual: float
    min_normalized: float
    location: float
    tol: float
    passed: bool

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.name}: min residual {self.min_residual:.4g} "
                f"(normalized {self.min_normalized:.3g}, tol {self.tol:g}) at y={self.location:.6g}")


@dataclass
class ResidualReport:
    results: list[InequalityResult] = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    threshold: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results) and all(bool(v) for v in self.checks.values())

    def __getitem__(self, name) -> InequalityResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def add(self, name, residual, scale, y, tol, mask=None):
        residual = np.asarray(residual, dtype=float)
        scale = np.broadcast_to(np.asarray(scale, dtype=float), residual.shape)
        keep = np.isfinite(residual) if mask is None else (np.asarray(mask) & np.isfinite(residual))
        if not keep.any():
            raise InsufficientSampling(f"no samples to scan for {name}")
        r = residual[keep]
        s = scale[keep]
        yy = np.asarray(y, dtype=float)[keep]
        with np.errstate(divide="ignore", invalid="ignore"):
            norm = np.where(s > 0, r / s, np.where(r >= 0, 0.0, -np.inf))
        i = int(np.argmin(norm))
        res = InequalityResult(name, float(r.min()), float(norm[i]), float(yy[i]), tol,
                               bool(norm[i] >= -tol))
        self.results.append(res)
        return res

    def to_dict(self):
        return {
            "passed": self.passed,
            "inequalities": [r.__dict__ for r in self.results],
            "checks": {k: bool(v) for k, v in self.checks.items()},
            "threshold": self.threshold,
            "notes": list(self.notes),
        }

    def lines(self):
        out = [r.line() for r in self.results]
        out += [f"{'PASS' if v else 'FAIL'} {k}" for k, v in self.checks.items()]
        return out


Inequality = Callable[[Mapping[str, np.ndarray]], tuple[np.ndarray, np.ndarray]]


def residual_scan(profile, inequalities: Mapping[str, Inequality], tol: float = 1e-8,
                  report: ResidualReport | None = None) -> ResidualReport:
    """Scan ``inequalities`` on a sampled profile.

    ``profile`` needs ``y``, ``U``, ``segments`` and optionally ``V``/``dV``.
    ``U_local`` (optional) holds one ``(g, scale)`` pair per segment with
    U = const + scale * g on that segment; derivatives are then taken from g.
    This keeps nearly flat pieces (excess over a constant) and steep
    exponential pieces (values relative to a local size) free of roundoff.
    Each inequality maps a dict of sampled quantities (``y, U, dU, d2U, V, dV``)
    to ``(residual, scale)``; the verdict is ``residual >= -tol * scale``.
    U derivatives are finite differences of the samples, except where the
    profile's boolean ``exact`` mask marks its own ``dU``/``d2U`` as exact.
    """
    y = np.asarray(profile.y, dtype=float)
    U = np.asarray(profile.U, dtype=float)
    local = getattr(profile, "U_local", None)
    if local is None:
        dU, d2U = piecewise_derivatives(y, U, profile.segments)
    else:
        dU = np.full(len(y), np.nan)
        d2U = np.full(len(y), np.nan)
        for seg, (g, scale) in zip(profile.segments, local):
            a, b = segment_derivatives(y[seg], g)
            dU[seg] = a * scale
            d2U[seg] = b * scale
    exact = getattr(profile, "exact", None)
    if exact is not None:
        # samples whose derivatives are known exactly (e.g. from an ODE right-hand side)
        exact = np.asarray(exact, dtype=bool)
        dU = np.where(exact, profile.dU, dU)
        d2U = np.where(exact, profile.d2U, d2U)
    q = {"y": y, "U": U, "dU": dU, "d2U": d2U}
    V = getattr(profile, "V", None)
    if V is not None:
        q["V"] = np.asarray(V, dtype=float)
        dV = getattr(profile, "dV", None)
        q["dV"] = piecewise_derivatives(y, q["V"], profile.segments)[0] if dV is None else np.asarray(dV)
    report = report or ResidualReport()
    for name, ineq in inequalities.items():
        residual, scale = ineq(q)
        report.add(name, residual, scale, y, tol)
    return report


@dataclass
class SampledProfile:
    """Minimal profile container accepted by :func:`residual_scan`."""

    y: np.ndarray
    U: np.ndarray
    segments: list
    V: np.ndarray | None = None
    dV: np.ndarray | None = None
    U_local: list | None = None
    dU: np.ndarray | None = None
    d2U: np.ndarray | None = None
    exact: np.ndarray | None = None


def uniform_segments(edges, n_per_segment):
    """Sample each [edges[i], edges[i+1]] uniformly with ``n_per_segment`` nodes.

    Neighbouring segments share their common endpoint node, so ``y`` is
    strictly increasing while each slice stays self-contained for differencing.
    """
    edges = [float(e) for e in edges]
    ys, segs = [], []
    start = 0
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if not b > a:
            raise InsufficientSampling(f"empty segment [{a}, {b}]")
        pts = np.linspace(a, b, n_per_segment)
        ys.append(pts if i == 0 else pts[1:])
        segs.append(slice(start, start + n_per_segment))
        start += n_per_segment - 1
    return np.concatenate(ys), segs


def empirical_threshold(verdicts: Mapping[float, bool]):
    """Smallest tested k from which every larger tested k passes; None if the largest fails.

    Isolated passes below a failing k are not thresholds.
    """
    K = None
    for k in sorted(verdicts, reverse=True):
        if not verdicts[k]:
            break
        K = k
    return K
