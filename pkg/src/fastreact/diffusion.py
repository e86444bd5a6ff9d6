"""Discrete Laplacians, monotone implicit diffusion steps, and the limit heat solver."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from .core import Field, Grid, SupportGeometry, Trajectory, step_schedule
from .errors import ConfigurationError, NumericalFailure

SOLVE_RTOL = 1e-12


def monotone_dt(grid: Grid) -> float:
    """Largest dt for which Crank-Nicolson keeps a nonnegative explicit part (h^2 in 1-D)."""
    return 1.0 / sum(1.0 / h**2 for h in grid.h)


def _axis_matrix(n, h):
    """1-D Laplacian with ghost-node reflection at both ends."""
    main = np.full(n, -2.0)
    upper = np.ones(n - 1)
    lower = np.ones(n - 1)
    upper[0] = 2.0
    lower[-1] = 2.0
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr") / h**2


class LinearStencil:
    """Second-order Laplacian on a grid.

    Neumann (reflecting) on the outer boundary; optionally zero Dirichlet on
    the nodes flagged by ``dirichlet`` (rows replaced by the identity).
    The operator is symmetric with respect to the trapezoid-weighted inner
    product, and its Neumann rows sum to zero.
    """

    def __init__(self, grid: Grid, dirichlet=None):
        self.grid = grid
        self.dirichlet = None if dirichlet is None else np.asarray(dirichlet, dtype=bool).reshape(grid.shape)
        mats = [_axis_matrix(n, h) for n, h in zip(grid.shape, grid.h)]
        if grid.dim == 1:
            L = mats[0]
        else:
            I0, I1 = sp.identity(grid.shape[0]), sp.identity(grid.shape[1])
            L = sp.kron(mats[0], I1) + sp.kron(I0, mats[1])
        L = sp.csr_matrix(L)
        if self.dirichlet is not None:
            keep = sp.diags((~self.dirichlet.ravel()).astype(float))
            L = sp.csr_matrix(keep @ L)
        self.matrix = L
        self._solvers = {}

    @property
    def tag(self):
        return "neumann" if self.dirichlet is None else "dirichlet-interior"

    def apply(self, values) -> np.ndarray:
        vals = np.asarray(values, dtype=float)
        return (self.matrix @ vals.ravel()).reshape(self.grid.shape)

    def monotone_dt(self) -> float:
        return monotone_dt(self.grid)

    def theta_for(self, dt) -> float:
        # same slack as step_schedule, which may stretch a step by 1e-9 to hit an output time
        return 0.5 if dt <= self.monotone_dt() * (1 + 1e-9) else 1.0

    def _solver(self, dt, theta):
        key = (float(dt), float(theta))
        if key not in self._solvers:
            n = self.grid.size
            A = sp.csr_matrix(sp.identity(n) - theta * dt * self.matrix)
            if self.grid.dim == 1:
                ab = np.zeros((3, n))
                ab[0, 1:] = A.diagonal(1)
                ab[1] = A.diagonal(0)
                ab[2, :-1] = A.diagonal(-1)
                solve = lambda b, ab=ab: solve_banded((1, 1), ab, b, check_finite=False)
            else:
                lu = splu(sp.csc_matrix(A))
                solve = lu.solve
            B = sp.csr_matrix(sp.identity(n) + (1 - theta) * dt * self.matrix)
            self._solvers[key] = (A, B, solve)
            if len(self._solvers) > 8:
                self._solvers.pop(next(iter(self._solvers)))
        return self._solvers[key]

    def step(self, values, dt, check=True, boundary=None) -> np.ndarray:
        """One implicit step of du/dt = Lu; raw array in, raw array out.

        ``boundary`` holds the values imposed on Dirichlet nodes (zero if omitted).
        """
        if not dt > 0:
            raise ConfigurationError("dt must be positive")
        theta = self.theta_for(dt)
        A, B, solve = self._solver(dt, theta)
        b = B @ np.asarray(values, dtype=float).ravel()
        if self.dirichlet is not None:
            mask = self.dirichlet.ravel()
            b[mask] = 0.0 if boundary is None else np.asarray(boundary, dtype=float).ravel()[mask]
        x = solve(b)
        if check:
            res = np.abs(A @ x - b).max()
            if not np.isfinite(res) or res > SOLVE_RTOL * max(1.0, np.abs(b).max()):
                raise NumericalFailure(f"diffusion solve residual {res:.3e} above tolerance")
        return x.reshape(self.grid.shape)


def neumann_laplacian(field: Field) -> Field:
    """Apply the reflecting Laplacian. The result is not required to be nonnegative."""
    stencil = LinearStencil(field.grid)
    return Field(field.grid, stencil.apply(field.values), field.t)


def implicit_diffusion_step(field: Field, dt: float, stencil: LinearStencil | None = None) -> Field:
    """Crank-Nicolson step, or backward Euler when ``dt`` exceeds the monotone cap."""
    stencil = stencil or LinearStencil(field.grid)
    return Field(field.grid, stencil.step(field.values, dt), field.t + dt)


def crank_nicolson_factor(lam, dt):
    return (1 - lam * dt / 2) / (1 + lam * dt / 2)


def neumann_eigenvalue(n, h, mode):
    """Eigenvalue (positive) of minus the reflecting Laplacian for cos(mode*pi*(x-x0)/L)."""
    L = (n - 1) * h
    return 4.0 / h**2 * np.sin(mode * np.pi * h / (2 * L)) ** 2


def heat_reference_solve(u0: Field, geometry: SupportGeometry, T: float, dt: float,
                         output_times=None) -> Trajectory:
    """Heat flow on the complement of supp v0 with zero data on supp v0.

    Returns a trajectory on the whole grid; values inside supp v0 are 0.
    """
    grid = u0.grid
    mask = geometry.in_support(grid)
    if np.any(u0.values[mask] > 0):
        raise ConfigurationError("u0 must vanish on supp v0 for the reference solve")
    if output_times is None:
        output_times = [T]
    stencil = LinearStencil(grid, dirichlet=mask)
    u = np.where(mask, 0.0, u0.values)
    times, snaps = [], []
    steps = 0
    for step, out in step_schedule(T, dt, output_times):
        if step > 0:
            u = stencil.step(u, step)
            steps += 1
        if out is not None:
            times.append(output_times[out])
            snaps.append(u.copy())
    meta = {"dt": dt, "steps": steps, "theta": stencil.theta_for(dt), "kind": "heat_reference"}
    return Trajectory(grid, np.array(times), np.array(snaps), None, meta)
