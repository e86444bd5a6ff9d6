"""Grids, fields, the geometry of supp v0, and problem descriptions."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import AssumptionError, ConfigurationError, SegregationError
from .expr import Expression

# Nodes with |rho| below this multiple of h count as lying on the interface.
_ON_BOUNDARY = 1e-9


@dataclass(frozen=True)
class Grid:
    extents: tuple[tuple[float, float], ...]
    points: tuple[int, ...]

    def __post_init__(self):
        if len(self.extents) != len(self.points) or len(self.points) not in (1, 2):
            raise ConfigurationError("grid must be 1-D or 2-D with one extent per axis")
        for (lo, hi), n in zip(self.extents, self.points):
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                raise ConfigurationError(f"degenerate extent ({lo}, {hi})")
            if int(n) != n or n < 3:
                raise ConfigurationError(f"need at least 3 points per axis, got {n}")

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(n) for n in self.points)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.extents, self.points))

    @property
    def hmin(self) -> float:
        return min(self.h)

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.extents, self.points)]

    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates as arrays of shape ``grid.shape`` (``ij`` indexing)."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def cell_weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights; their sum is the domain volume."""
        w = np.ones(self.shape)
        for axis, hax in enumerate(self.h):
            wa = np.full(self.shape[axis], hax)
            wa[0] = wa[-1] = hax / 2
            shape = [1] * self.dim
            shape[axis] = -1
            w = w * wa.reshape(shape)
        return w

    def refined(self) -> "Grid":
        return Grid(self.extents, tuple(2 * (n - 1) + 1 for n in self.points))

    def to_dict(self):
        return {"extents": [list(e) for e in self.extents], "points": list(self.shape)}


def build_grid(extents, points_per_axis) -> Grid:
    """Uniform grid; ``extents`` is one (lo, hi) pair or a sequence of them."""
    ext = np.atleast_2d(np.asarray(extents, dtype=float))
    pts = np.atleast_1d(np.asarray(points_per_axis))
    if ext.shape[1] != 2:
        raise ConfigurationError("extents must be (lo, hi) pairs")
    if len(pts) == 1 and len(ext) > 1:
        pts = np.repeat(pts, len(ext))
    return Grid(tuple((float(a), float(b)) for a, b in ext), tuple(int(n) for n in pts))


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if self.t < 0:
            raise ValueError("time stamp must be nonnegative")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def with_values(self, values, t=None) -> "Field":
        return Field(self.grid, values, self.t if t is None else t)

    def max(self) -> float:
        return float(self.values.max())

    def mass(self) -> float:
        return float(np.sum(self.values * self.grid.cell_weights()))


# --------------------------------------------------------------------------- geometry


class SupportGeometry:
    """Closed set supp v0 inside the domain; subclasses provide signed distance.

    The sign convention is positive in the open complement of supp v0 and
    negative inside supp v0.
    """

    dim: int

    def signed_distance(self, *coords) -> np.ndarray:
        raise NotImplementedError

    def validate(self, extents) -> None:
        raise NotImplementedError

    def curvature_bound(self, d: float) -> float:
        """Bound for |Laplacian of rho| on the tube |rho| < d."""
        raise NotImplementedError

    def reach(self, extents) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def in_support(self, grid: Grid) -> np.ndarray:
        """Mask of nodes in supp v0; nodes on the interface count as inside."""
        rho = self.signed_distance(*grid.coords())
        return rho <= _ON_BOUNDARY * grid.hmin


@dataclass(frozen=True)
class IntervalSupport(SupportGeometry):
    """Finite union of closed intervals; every complement gap is interior."""

    intervals: tuple[tuple[float, float], ...]
    dim = 1

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        for a, b in ivs:
            if b < a:
                raise ConfigurationError(f"interval ({a}, {b}) is reversed")
        object.__setattr__(self, "intervals", ivs)

    def boundary_points(self, extents=None) -> np.ndarray:
        pts = sorted({p for iv in self.intervals for p in iv})
        if extents is not None:
            lo, hi = extents[0]
            pts = [p for p in pts if lo < p < hi]
        return np.array(pts)

    def validate(self, extents):
        (lo, hi), = extents
        if not self.intervals:
            raise ConfigurationError("support needs at least one interval")
        for a, b in self.intervals:
            if a < lo or b > hi:
                raise ConfigurationError(f"interval ({a}, {b}) leaves the domain")
        for (a1, b1), (a2, b2) in zip(self.intervals, self.intervals[1:]):
            if a2 <= b1:
                raise ConfigurationError("support intervals must be disjoint")
        if self.intervals[0][0] > lo or self.intervals[-1][1] < hi:
            raise ConfigurationError("complement of the support must be compactly contained in the domain")
        if len(self.intervals) < 2:
            raise ConfigurationError("complement of the support is empty")

    def signed_distance(self, x, *rest):
        x = np.asarray(x, dtype=float)
        # the outermost endpoints are domain walls, not interfaces
        bps = np.array(sorted({p for iv in self.intervals for p in iv})[1:-1])
        dist = np.min(np.abs(x[..., None] - bps), axis=-1)
        inside = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            inside |= (x >= a) & (x <= b)
        return np.where(inside, -dist, dist)

    def curvature_bound(self, d):
        return 0.0

    def reach(self, extents):
        (lo, hi), = extents
        out = np.inf
        for a, b in self.intervals:
            length = b - a
            out = min(out, length if (a <= lo or b >= hi) else length / 2)
        gaps = [a2 - b1 for (_, b1), (a2, _) in zip(self.intervals, self.intervals[1:])]
        return float(min(out, min(gaps) / 2))

    def to_dict(self):
        return {"kind": "intervals", "intervals": [list(iv) for iv in self.intervals]}


@dataclass(frozen=True)
class DiskComplement(SupportGeometry):
    """supp v0 is the domain minus the open disk |x - center| < radius."""

    center: tuple[float, float]
    radius: float
    dim = 2

    def validate(self, extents):
        (x0, x1), (y0, y1) = extents
        cx, cy = self.center
        margin = min(cx - x0, x1 - cx, cy - y0, y1 - cy) - self.radius
        if self.radius <= 0 or margin <= 0:
            raise ConfigurationError("disk must lie strictly inside the domain")

    def signed_distance(self, x, y):
        r = np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1])
        return self.radius - r

    def curvature_bound(self, d):
        return 1.0 / (self.radius - d)

    def reach(self, extents):
        (x0, x1), (y0, y1) = extents
        cx, cy = self.center
        wall = min(cx - x0, x1 - cx, cy - y0, y1 - cy) - self.radius
        return float(min(self.radius, wall))

    def to_dict(self):
        return {"kind": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class RoundedRectComplement(SupportGeometry):
    """supp v0 is the domain minus an open axis-aligned rounded rectangle."""

    center: tuple[float, float]
    half_widths: tuple[float, float]
    corner_radius: float
    dim = 2

    def validate(self, extents):
        (x0, x1), (y0, y1) = extents
        cx, cy = self.center
        a, b = self.half_widths
        r = self.corner_radius
        if r <= 0 or r > min(a, b):
            raise ConfigurationError("corner radius must be in (0, min(half_widths)]")
        if min(cx - a - x0, x1 - cx - a, cy - b - y0, y1 - cy - b) <= 0:
            raise ConfigurationError("rounded rectangle must lie strictly inside the domain")

    def signed_distance(self, x, y):
        r = self.corner_radius
        qx = np.abs(np.asarray(x) - self.center[0]) - (self.half_widths[0] - r)
        qy = np.abs(np.asarray(y) - self.center[1]) - (self.half_widths[1] - r)
        outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
        inside = np.minimum(np.maximum(qx, qy), 0)
        return -(outside + inside - r)

    def curvature_bound(self, d):
        return 1.0 / (self.corner_radius - d)

    def reach(self, extents):
        (x0, x1), (y0, y1) = extents
        cx, cy = self.center
        a, b = self.half_widths
        wall = min(cx - a - x0, x1 - cx - a, cy - b - y0, y1 - cy - b)
        return float(min(self.corner_radius, wall))

    def to_dict(self):
        return {"kind": "rounded_rect", "center": list(self.center),
                "half_widths": list(self.half_widths), "corner_radius": self.corner_radius}


def geometry_from_dict(d: Mapping) -> SupportGeometry:
    kind = d.get("kind")
    if kind == "intervals":
        return IntervalSupport(tuple(tuple(iv) for iv in d["intervals"]))
    if kind == "disk":
        return DiskComplement(tuple(d["center"]), float(d["radius"]))
    if kind == "rounded_rect":
        return RoundedRectComplement(tuple(d["center"]), tuple(d["half_widths"]), float(d["corner_radius"]))
    raise ConfigurationError(f"unknown support kind {kind!r}")


def signed_distance(geometry: SupportGeometry, *x) -> np.ndarray:
    return geometry.signed_distance(*x)


# --------------------------------------------------------------------------- initial data

REGIONS = ("complement", "support", "all")


@dataclass(frozen=True)
class InitialData:
    """u0 and v0 as closed-form expressions restricted to a region.

    Outside its region an expression is replaced by zero. Interface nodes
    belong to the support, so u0 is forced to zero there.
    """

    u0: Expression
    v0: Expression
    u0_region: str = "complement"
    v0_region: str = "support"

    def __post_init__(self):
        for name in ("u0", "v0"):
            val = getattr(self, name)
            if not isinstance(val, Expression):
                object.__setattr__(self, name, Expression(val))
        for reg in (self.u0_region, self.v0_region):
            if reg not in REGIONS:
                raise ConfigurationError(f"region must be one of {REGIONS}, got {reg!r}")

    def to_dict(self):
        return {"u0": {"expr": self.u0.text, "region": self.u0_region},
                "v0": {"expr": self.v0.text, "region": self.v0_region}}


@dataclass(frozen=True)
class ProblemSpec:
    grid: Grid
    geometry: SupportGeometry
    initial: InitialData
    k: float
    m3: float = 1.0
    m4: float = 1.0
    T: float = 0.1
    solver: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.geometry.dim != self.grid.dim:
            raise ConfigurationError("geometry and grid dimensions differ")
        self.geometry.validate(self.grid.extents)
        if not self.k > 0:
            raise ConfigurationError("k must be positive")
        if self.m3 < 1 or self.m4 < 1:
            raise ConfigurationError("m3 and m4 must be >= 1")
        if not self.T > 0:
            raise ConfigurationError("T must be positive")
        unknown = set(self.solver) - SOLVER_KEYS
        if unknown:
            raise ConfigurationError(f"unknown solver keys {sorted(unknown)}")
        object.__setattr__(self, "solver", dict(self.solver))

    @property
    def exponents_admissible(self) -> bool:
        """True when m3 > 1 or m4 >= 2, the exponent range where the limit is known to hold."""
        return self.m3 > 1 or self.m4 >= 2

    def with_(self, **changes) -> "ProblemSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "domain": {"extents": [list(e) for e in self.grid.extents]},
            "support": self.geometry.to_dict(),
            "initial": self.initial.to_dict(),
            "params": {"k": self.k, "m3": self.m3, "m4": self.m4, "T": self.T},
            "grid": {"points": list(self.grid.shape)},
            "solver": dict(self.solver),
        }


SOLVER_KEYS = {"dt", "c", "seed", "theta"}


def eval_initial_data(spec: ProblemSpec) -> tuple[Field, Field]:
    grid = spec.grid
    coords = grid.coords()
    supp = spec.geometry.in_support(grid)
    regions = {"complement": ~supp, "support": supp, "all": np.ones_like(supp)}

    def evaluate(expr, region):
        vals = expr(*coords)
        return np.where(regions[region], vals, 0.0)

    u0 = evaluate(spec.initial.u0, spec.initial.u0_region)
    v0 = evaluate(spec.initial.v0, spec.initial.v0_region)
    rho = spec.geometry.signed_distance(*coords)
    u0 = np.where(np.abs(rho) <= _ON_BOUNDARY * grid.hmin, 0.0, u0)
    if not (np.all(np.isfinite(u0)) and np.all(np.isfinite(v0))):
        raise AssumptionError("initial data must be finite at every node")
    # round-off can leave -1e-17 where an expression vanishes on the interface
    tiny = 1e-14 * max(1.0, np.abs(u0).max())
    u0 = np.where(np.abs(u0) <= tiny, 0.0, u0)
    if u0.min() < 0 or v0.min() < 0:
        raise AssumptionError("initial data must be nonnegative")
    if not u0.any():
        raise AssumptionError("u0 vanishes identically")
    if not v0.any():
        raise AssumptionError("v0 vanishes identically")
    bad = (u0 * v0) > 0
    if bad.any():
        idx = np.argwhere(bad)[0]
        where = tuple(float(c[tuple(idx)]) for c in coords)
        raise SegregationError(f"u0*v0 > 0 at node {where}")
    return Field(grid, u0, 0.0), Field(grid, v0, 0.0)


def p1_problem(k=1e4, m3=2.0, m4=1.0, T=0.1, points=801, **solver) -> ProblemSpec:
    """Canonical 1-D problem: v0 = 1 on [-1,-0.3] U [0.3,1], u0 = cos(pi x/0.6) between."""
    return ProblemSpec(
        grid=build_grid((-1.0, 1.0), points),
        geometry=IntervalSupport(((-1.0, -0.3), (0.3, 1.0))),
        initial=InitialData(Expression("cos(pi*x/0.6)"), Expression("1")),
        k=float(k), m3=float(m3), m4=float(m4), T=float(T), solver=solver,
    )


def disk_problem(k=1e3, m3=2.0, m4=1.0, T=0.05, points=81, radius=0.4, **solver) -> ProblemSpec:
    """2-D companion: the reaction-free region is a disk in the unit square (-1,1)^2."""
    R = radius
    return ProblemSpec(
        grid=build_grid(((-1.0, 1.0), (-1.0, 1.0)), points),
        geometry=DiskComplement((0.0, 0.0), R),
        initial=InitialData(Expression(f"cos(pi*sqrt(x^2+y^2)/(2*{R!r}))"), Expression("1")),
        k=float(k), m3=float(m3), m4=float(m4), T=float(T), solver=solver,
    )


def norms(u0: Field, v0: Field) -> tuple[float, float]:
    """Bounds M_u = max u0 and M_v = max v0."""
    return u0.max(), v0.max()



@dataclass(eq=False)
class Trajectory:
    """Time-stamped snapshots of u (and v, when the run has one)."""

    grid: Grid
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.v is not None:
            self.v = np.asarray(self.v, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if self.u.shape != (len(self.times),) + self.grid.shape:
            raise ValueError("u snapshots do not match grid and times")

    def __len__(self):
        return len(self.times)

    def snapshot(self, i) -> tuple[Field, Field | None]:
        t = float(self.times[i])
        u = Field(self.grid, self.u[i], t)
        v = None if self.v is None else Field(self.grid, self.v[i], t)
        return u, v

    def at(self, t) -> int:
        """Index of the snapshot at time ``t``."""
        i = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[i], t, rtol=0, atol=1e-12 * max(1.0, abs(t))):
            raise KeyError(f"no snapshot at t={t}")
        return i


def step_schedule(T_end, dt, output_times):
    """Split [0, T_end] into steps of at most ``dt`` that land on every output time.

    Returns a list of (step, output_index or None). The final step before
    each output time is shortened as needed.
    """
    outs = np.asarray(output_times, dtype=float)
    if outs.size and (np.any(np.diff(outs) <= 0) or outs[0] < 0 or outs[-1] > T_end * (1 + 1e-12)):
        raise ConfigurationError("output times must be strictly increasing and inside [0, T]")
    sched = []
    t = 0.0
    for j, target in enumerate(outs):
        gap = target - t
        if gap <= 1e-14 * max(1.0, target):
            sched.append((0.0, j))
            continue
        n = max(1, int(np.ceil(gap / dt - 1e-9)))
        for _ in range(n - 1):
            sched.append((dt, None))
        sched.append((gap - (n - 1) * dt, j))
        t = target
    return sched
