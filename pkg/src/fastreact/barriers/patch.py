"""Pointwise-minimum patching of one-dimensional barrier pieces.

A piece is a smooth profile on a window [a, b].  ``patch_min`` takes the
minimum over the pieces active at each point (lowest index on ties), finds
the switch points by bisection, checks continuity and the gap condition at
window boundaries, and optionally rebuilds V from the patched U.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import bisect

from ..errors import ConfigurationError
from ..reaction import v_exact_update
from .cosh import logcosh, logsinh
from .profile import BarrierProfile, ConstructionFailure
from .scan import ResidualReport

SAMPLES = 64
PROBE = 33
_MIN_REL = 1e-9
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class Piece:
    """Smooth profile on the window [a, b].  Subclasses supply U and U'."""

    name = "piece"
    exact = False

    def __init__(self, a, b, name=None):
        if not b > a:
            raise ConfigurationError(f"empty window [{a}, {b}]")
        self.a = float(a)
        self.b = float(b)
        if name is not None:
            self.name = name

    def values(self, y):
        raise NotImplementedError

    def U(self, y):
        return self.values(y)[0]

    def edges(self, ya, yb):
        """Subdivision of [ya, yb] used for sampling (pieces may refine it)."""
        return [ya, yb]

    def sample(self, ya, yb, n):
        """n uniform samples on [ya, yb]: dict with y, U, dU, d2U, g, scale, exact."""
        y = np.linspace(ya, yb, n)
        U, dU = self.values(y)
        return {"y": y, "U": U, "dU": dU, "d2U": np.full(n, np.nan), "g": U, "scale": 1.0,
                "exact": np.zeros(n, dtype=bool)}

    def V(self, y):
        """The piece's own V (None when the piece carries none)."""
        return None

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, [{self.a:.6g}, {self.b:.6g}])"


class FunctionPiece(Piece):
    """Piece from plain callables; ``d2U`` given means derivatives are exact."""

    def __init__(self, a, b, U, dU, d2U=None, V=None, name="function"):
        super().__init__(a, b, name)
        self._U, self._dU, self._d2U, self._V = U, dU, d2U, V

    def values(self, y):
        y = np.asarray(y, dtype=float)
        return (np.broadcast_to(self._U(y), y.shape).astype(float),
                np.broadcast_to(self._dU(y), y.shape).astype(float))

    def sample(self, ya, yb, n):
        out = super().sample(ya, yb, n)
        if self._d2U is not None:
            out["d2U"] = np.broadcast_to(self._d2U(out["y"]), (n,)).astype(float)
            out["exact"][:] = True
        return out

    def V(self, y):
        return None if self._V is None else np.broadcast_to(self._V(np.asarray(y, float)), np.shape(y))


def constant_piece(c, a, b, name="constant"):
    return FunctionPiece(a, b, lambda y: np.full(np.shape(y), float(c)), lambda y: np.zeros(np.shape(y)),
                         lambda y: np.zeros(np.shape(y)), name=name)


class CoshPiece(Piece):
    """k^-2 cosh(sqrt(gamma k) (y - center)), evaluated in log space for large argument."""

    name = "cosh"

    def __init__(self, gamma, k, center, a, b, v_rule=None, name="U1"):
        super().__init__(a, b, name)
        self.gamma, self.k, self.center = float(gamma), float(k), float(center)
        self.sq = np.sqrt(gamma * k)
        self.v_rule = v_rule

    def z(self, y):
        return self.sq * (np.asarray(y, dtype=float) - self.center)

    def values(self, y):
        z = self.z(y)
        az = np.abs(z)
        lk = np.log(self.k)
        k2 = self.k ** -2.0
        with np.errstate(over="ignore"):
            small = az <= 20.0
            U = np.where(small, k2 * np.cosh(np.minimum(az, 20.0)), np.exp(logcosh(az) - 2 * lk))
            mag = np.where(small, k2 * np.sinh(np.minimum(az, 20.0)),
                           np.exp(logsinh(np.maximum(az, 20.0)) - 2 * lk))
        return U, np.sign(z) * mag * self.sq

    def excess(self, y):
        """U(y) - k^-2 without cancellation."""
        return self.k ** -2.0 * 2 * np.sinh(self.z(y) / 2) ** 2

    def edges(self, ya, yb):
        za, zb = self.z(ya), self.z(yb)
        cuts = np.arange(np.ceil(za), np.floor(zb) + 1.0)
        inner = [self.center + c / self.sq for c in cuts if za < c < zb]
        return [ya] + [e for e in inner if ya < e < yb] + [yb]

    def sample(self, ya, yb, n):
        y = np.linspace(ya, yb, n)
        U, dU = self.values(y)
        za, zb = float(self.z(ya)), float(self.z(yb))
        # z from the index so node jitter in y does not enter the differences
        z = za + (zb - za) * np.arange(n) / (n - 1)
        if za * zb <= 0 or min(abs(za), abs(zb)) < 1.0:
            g, scale = 2 * np.sinh(z / 2) ** 2, self.k ** -2.0
        else:
            az = np.abs(z)
            zc = 0.5 * (az[0] + az[-1])
            g = (np.exp(az - zc) + np.exp(-az - zc)) / (1 + np.exp(-2 * zc))
            scale = float(np.exp(logcosh(zc) - 2 * np.log(self.k)))
        return {"y": y, "U": U, "dU": dU, "d2U": self.gamma * self.k * U, "g": g, "scale": scale,
                "exact": np.zeros(n, dtype=bool)}

    def V(self, y):
        if self.v_rule is None:
            return None
        return rebuild_v(self, self.a, np.atleast_1d(np.asarray(y, float)), **self.v_rule)


class QuadraticPiece(Piece):
    """base - L^(3/4) t^2 + 4 L^(1/2) t with t = y - origin (the cap piece)."""

    name = "cap"

    def __init__(self, logk, origin, base, a, b, name="cap"):
        super().__init__(a, b, name)
        self.L, self.origin, self.base = float(logk), float(origin), float(base)
        self.c2 = self.L ** 0.75
        self.c1 = 4 * np.sqrt(self.L)

    def poly(self, t):
        return -self.c2 * t**2 + self.c1 * t

    def values(self, y):
        t = np.asarray(y, dtype=float) - self.origin
        return self.base + self.poly(t), -2 * self.c2 * t + self.c1

    def sample(self, ya, yb, n):
        y = np.linspace(ya, yb, n)
        U, dU = self.values(y)
        ta, tb = ya - self.origin, yb - self.origin
        t = ta + (tb - ta) * np.arange(n) / (n - 1)
        return {"y": y, "U": U, "dU": dU, "d2U": np.full(n, -2 * self.c2), "g": self.poly(t), "scale": 1.0,
                "exact": np.zeros(n, dtype=bool)}

    def V(self, y):
        return np.zeros(np.shape(y))


class OdePiece(Piece):
    """Shifted integro-ODE barrier: U(y) = U3(y - shift) from a dense solution of (U, U', I)."""

    name = "ode"
    exact = True

    def __init__(self, sol, shift, a, b, a2, b2, k, V3=None, name="U3"):
        super().__init__(a, b, name)
        self.sol, self.shift = sol, float(shift)
        self.a2, self.b2, self.k = float(a2), float(b2), float(k)
        self._V3 = V3

    def state(self, y):
        x = np.asarray(y, dtype=float) - self.shift
        w = self.sol(np.atleast_1d(x))
        if x.ndim == 0:
            return tuple(float(c[0]) for c in w)
        return w[0], w[1], w[2]

    def values(self, y):
        U, dU, _ = self.state(y)
        return U, dU

    def edges(self, ya, yb):
        return list(np.linspace(ya, yb, 9))

    def sample(self, ya, yb, n):
        y = np.linspace(ya, yb, n)
        U, dU, I = self.state(y)
        d2U = self.a2 * self.k * U / (self.k * I + self.b2)
        return {"y": y, "U": U, "dU": dU, "d2U": d2U, "g": U, "scale": 1.0, "exact": np.ones(n, dtype=bool)}

    def V(self, y):
        if self._V3 is None:
            return None
        return self._V3(np.asarray(y, dtype=float) - self.shift)


def _gl_increments(piece, y, m3):
    """int of U^m3 over each sample interval of y (8-point Gauss-Legendre)."""
    lo, hi = y[:-1], y[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = piece.U(nodes.ravel()).reshape(nodes.shape) ** m3
    return half * (vals @ _GL_W)


def rebuild_v(piece, y0, y, k, s, m3, m4, v0, panels=16):
    """V = v0 advanced by J = (k/s) int_{y0}^y U^m3 along a single piece.

    Each target point gets its own composite Gauss-Legendre rule over the
    piece's sampling subdivision of [y0, y].
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    J = np.empty(len(y))
    for n, yy in enumerate(y):
        if yy == y0:
            J[n] = 0.0
            continue
        lo, hi = min(y0, yy), max(y0, yy)
        cuts = piece.edges(lo, hi)
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b > a:
                total += _gl_increments(piece, np.linspace(a, b, panels + 1), m3).sum()
        J[n] = np.sign(yy - y0) * total * (k / s)
    return v_exact_update(v0, J, m4)


def _argmin_index(vals):
    """Lowest index attaining the minimum along axis 0."""
    return np.argmin(vals, axis=0)


def _active(pieces, lo, hi):
    return [i for i, p in enumerate(pieces) if p.a <= lo and hi <= p.b]


def patch_min(pieces, delta=None, samples=SAMPLES, v_rule=None, params=None):
    """Pointwise minimum of ``pieces`` (sequence of :class:`Piece`).

    ``delta`` defaults to half the smallest gap measured at interior window
    boundaries.  ``v_rule`` (dict with k, s, m3, m4, v0) rebuilds
    V = v_exact_update(v0, (k/s) int_0^y U^m3).  Raises ConstructionFailure
    when a window boundary leaves no gap.
    """
    pieces = list(pieces)
    if not pieces:
        raise ConfigurationError("patch_min needs at least one piece")
    if delta is not None and not delta > 0:
        raise ConfigurationError("delta must be positive")
    A = min(p.a for p in pieces)
    B = max(p.b for p in pieces)
    ends = sorted({p.a for p in pieces} | {p.b for p in pieces})
    report = ResidualReport()
    switches = []
    # locate switch points between consecutive window ends
    for lo, hi in zip(ends[:-1], ends[1:]):
        act = _active(pieces, lo, hi)
        if not act:
            raise ConfigurationError(f"no piece covers ({lo:.6g}, {hi:.6g})")
        if len(act) == 1:
            continue
        probe = _probe_nodes([pieces[i] for i in act], lo, hi)
        vals = np.array([pieces[i].U(probe) for i in act])
        idx = _argmin_index(vals)
        for j in np.nonzero(idx[1:] != idx[:-1])[0]:
            left, right = pieces[act[idx[j]]], pieces[act[idx[j + 1]]]
            f = lambda t, p=left, q=right: float(p.U(t)) - float(q.U(t))
            ya, yb = probe[j], probe[j + 1]
            fa, fb = f(ya), f(yb)
            if fa == 0.0:
                ys = ya
            elif fb == 0.0 or fa * fb > 0:
                ys = yb
            else:
                ys = bisect(f, ya, yb, xtol=1e-300, rtol=1e-12, maxiter=4000)
            switches.append((ys, act[idx[j]], act[idx[j + 1]]))
    breaks = sorted(set(ends) | {s for s, _, _ in switches})
    # sample each breakpoint interval with its active piece
    ys, Us, dUs, d2Us, exact, index, segs, local = [], [], [], [], [], [], [], []
    skipped = []
    start = 0
    carry = None  # left end of a skipped sliver, folded into the next segment
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if not hi > lo:
            continue
        act = _active(pieces, lo, hi)
        mid = 0.5 * (lo + hi)
        li = act[int(np.argmin([float(pieces[i].U(mid)) for i in act]))]
        piece = pieces[li]
        sub = piece.edges(lo, hi)
        for a, b in zip(sub[:-1], sub[1:]):
            if not (b - a) / (samples - 1) > _MIN_REL * max(abs(a), abs(b)):
                if b > a:
                    skipped.append((a, b))
                    carry = a if carry is None else carry
                continue
            if carry is not None and ys:
                a, carry = carry, None
            smp = piece.sample(a, b, samples)
            keep = slice(1, None) if ys else slice(None)
            ys.append(smp["y"][keep])
            Us.append(smp["U"][keep])
            dUs.append(smp["dU"][keep])
            d2Us.append(smp["d2U"][keep])
            exact.append(smp["exact"][keep])
            index.append(np.full(len(smp["y"][keep]), li))
            segs.append(slice(start, start + samples))
            local.append((smp["g"], smp["scale"]))
            start += samples - 1
    y = np.concatenate(ys)
    U = np.concatenate(Us)
    prof = BarrierProfile(y, U, np.concatenate(dUs), segs, "patched", dict(params or {}),
                          index=np.concatenate(index), U_local=local, d2U=np.concatenate(d2Us),
                          exact=np.concatenate(exact), report=report)
    # continuity and kink orientation at switches
    jumps, kinks = [], []
    for ys_, i, j in switches:
        Ui, dUi = (float(v) for v in pieces[i].values(ys_))
        Uj, dUj = (float(v) for v in pieces[j].values(ys_))
        jumps.append(abs(Ui - Uj) / max(abs(Ui), abs(Uj), 1e-300))
        kinks.append(dUi - dUj)
    report.checks["continuity"] = all(jmp <= 1e-9 for jmp in jumps)
    report.checks["switch_kinks_concave"] = all(
        kk >= -1e-9 * max(1.0, abs(float(pieces[i].values(s_)[1]))) for kk, (s_, i, _) in zip(kinks, switches))
    # gap condition at interior window boundaries
    gaps = []
    for pi, p in enumerate(pieces):
        for e in (p.a, p.b):
            if e <= A or e >= B:
                continue
            act = [i for i, q in enumerate(pieces) if q.a <= e <= q.b]
            if len(act) < 2:
                gaps.append((e, pi, -np.inf))
                continue
            vals = np.array([float(pieces[i].U(e)) for i in act])
            li = act[int(np.argmin(vals))]
            u = vals.min()
            if li == pi:
                gap = float(p.U(e)) - min(v for i, v in zip(act, vals) if i != pi)
            else:
                gap = min(v for i, v in zip(act, vals) if i != li) - u
            gaps.append((e, pi, gap))
    min_gap = min((g for _, _, g in gaps), default=np.inf)
    if delta is None:
        delta = 0.5 * min_gap if np.isfinite(min_gap) and min_gap > 0 else 0.0
    report.checks["delta_gap"] = all(g > delta for _, _, g in gaps) and (not gaps or delta > 0)
    for e, pi, g in gaps:
        if not g > delta:
            report.notes.append(f"gap {g:.3g} <= delta {delta:.3g} at window boundary y={e:.9g} of {pieces[pi].name}")
    prof.breakpoints.update({f"switch{n}": s_ for n, (s_, _, _) in enumerate(switches)})
    prof.breakpoints.update({f"{p.name}.a": p.a for p in pieces})
    prof.breakpoints.update({f"{p.name}.b": p.b for p in pieces})
    prof.diagnostics.update({"delta": delta, "min_gap": min_gap, "gaps": [(e, pieces[i].name, g) for e, i, g in gaps],
                             "switches": [(s_, pieces[i].name, pieces[j].name) for s_, i, j in switches],
                             "switch_jumps": jumps, "switch_kinks": kinks})
    prof.pieces = pieces
    if skipped:
        prof.diagnostics["unsampled_segments"] = skipped
        report.notes.append(f"{len(skipped)} segment(s) below floating-point resolution were not sampled")
    if v_rule is not None:
        _attach_v(prof, pieces, v_rule)
        vi_ok = True
        for s_, i, j in switches:
            at = np.searchsorted(prof.y, s_)
            at = min(at, len(prof.y) - 1)
            Vs = float(np.interp(s_, prof.y, prof.V))
            for q in (i, j):
                Vq = pieces[q].V(np.array([s_]))
                if Vq is not None and Vs < float(np.ravel(Vq)[0]) * (1 - 1e-9):
                    vi_ok = False
                    report.notes.append(f"V below {pieces[q].name}'s V at switch y={s_:.9g}")
        report.checks["V_ge_Vi_at_switches"] = vi_ok
    return prof


def evaluate_min(pieces, y, floor=0.0):
    """Windowed pointwise minimum at arbitrary ``y``.

    Returns ``(U, excess, index)``: excess is U - floor, taken from a piece's
    own cancellation-free ``excess`` when it has one; index is -1 (and U inf)
    where no window covers y.  Ties go to the lowest index.
    """
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    best_U = np.full(y.shape, np.inf)
    best_E = np.full(y.shape, np.inf)
    index = np.full(y.shape, -1)
    for i, p in enumerate(pieces):
        inside = (y >= p.a) & (y <= p.b)
        if not inside.any():
            continue
        yy = y[inside]
        U = np.asarray(p.U(yy), dtype=float)
        E = np.asarray(p.excess(yy), dtype=float) if hasattr(p, "excess") else U - floor
        better = E < best_E[inside]
        sel = np.flatnonzero(inside)[better]
        best_U[sel], best_E[sel], index[sel] = U[better], E[better], i
    if scalar:
        return float(best_U[0]), float(best_E[0]), int(index[0])
    return best_U, best_E, index


def _probe_nodes(pieces, lo, hi):
    cuts = sorted({lo, hi} | {e for p in pieces for e in p.edges(lo, hi)})
    pts = [np.linspace(a, b, PROBE)[:-1] for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
    return np.concatenate(pts + [np.array([hi])])


def _attach_v(prof, pieces, rule):
    """V from the patched U: V = v_exact_update(v0, (k/s) int_0^y U^m3)."""
    k, s, m3, m4, v0 = rule["k"], rule["s"], rule["m3"], rule["m4"], rule["v0"]
    y = prof.y
    J = np.zeros(len(y))
    J_local = []
    total = 0.0
    for seg in prof.segments:
        yy = y[seg]
        piece = pieces[int(prof.index[seg][-1])]
        inc = _gl_increments(piece, yy, m3) * (k / s)
        loc = np.concatenate([[0.0], np.cumsum(inc)])
        J[seg] = total + loc
        J_local.append(loc)
        total = J[seg][-1]
    prof.V = v_exact_update(v0, J, m4)
    prof.diagnostics["J"] = J
    prof.diagnostics["J_local"] = J_local
    prof.params.update({"v0": v0, "s": s, "k": k, "m3": m3, "m4": m4})
