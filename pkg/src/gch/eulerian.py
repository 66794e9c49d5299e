"""Finite-difference reference solver in physical variables (smooth regime only).

    u_t = -(alpha u + beta) u_x - d/dx P1 - P2 - lam u,
    P1 = (1 - d_xx)^{-1} (h(u) + alpha/2 u_x^2),   P2 = k (1 - d_xx)^{-1} u.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import BreakingImminent, NumericalBlowup
from .model import GchParams, eval_h
from .semilinear import snapshot_steps

BREAKING_FACTOR = 50.0


@dataclass
class EulerianGrid:
    t: float
    x: np.ndarray
    u: np.ndarray

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def copy(self) -> "EulerianGrid":
        return EulerianGrid(self.t, self.x.copy(), self.u.copy())


def uniform_grid(half_width: float, dx: float) -> np.ndarray:
    m = int(round(half_width / dx))
    return dx * np.arange(-m, m + 1, dtype=float)


@numba.njit(cache=True)
def _thomas_const(diag, off, f, out, cp):
    # symmetric Toeplitz tridiagonal system: diag on the diagonal, off above and below
    n = f.size
    cp[0] = off / diag
    out[0] = f[0] / diag
    for i in range(1, n):
        m = diag - off * cp[i - 1]
        cp[i] = off / m
        out[i] = (f[i] - off * out[i - 1]) / m
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


def helmholtz_invert(f: np.ndarray, dx: float) -> np.ndarray:
    """Solve (1 - D2) P = f with centered D2 and P = 0 just outside the grid."""
    f = np.ascontiguousarray(f, dtype=float)
    r = 1.0 / (dx * dx)
    out = np.empty_like(f)
    _thomas_const(1.0 + 2.0 * r, -r, f, out, np.empty_like(f))
    return out


def apply_helmholtz(P: np.ndarray, dx: float) -> np.ndarray:
    """(1 - D2) P with the same zero ghost values."""
    padded = np.concatenate(([0.0], P, [0.0]))
    return P - (padded[2:] - 2.0 * P + padded[:-2]) / (dx * dx)


def centered_diff(u: np.ndarray, dx: float) -> np.ndarray:
    padded = np.concatenate(([0.0], u, [0.0]))
    return (padded[2:] - padded[:-2]) / (2.0 * dx)


def upwind_transport(u: np.ndarray, speed: np.ndarray, dx: float) -> np.ndarray:
    """speed * u_x with one-sided differences taken from the upwind side."""
    padded = np.concatenate(([0.0], u, [0.0]))
    back = (u - padded[:-2]) / dx
    fwd = (padded[2:] - u) / dx
    return speed * np.where(speed > 0, back, fwd)


def rhs_eulerian(grid: EulerianGrid, params: GchParams, breaking_threshold: float | None = None):
    dx = grid.dx
    u = grid.u
    Du = centered_diff(u, dx)
    limit = BREAKING_FACTOR / math.sqrt(dx) if breaking_threshold is None else breaking_threshold
    peak = float(np.max(np.abs(Du)))
    if peak > limit:
        raise BreakingImminent(f"max|u_x| = {peak:.4g} exceeds {limit:.4g} at t={grid.t:.6g}")
    P1 = helmholtz_invert(eval_h(params.h, u) + 0.5 * params.alpha * Du**2, dx)
    speed = params.alpha * u + params.beta
    du = -upwind_transport(u, speed, dx) - centered_diff(P1, dx) - params.lam * u
    if params.k != 0.0:
        du -= params.k * helmholtz_invert(u, dx)
    return du


def h1_energy(grid: EulerianGrid) -> float:
    """Trapezoid of u^2 + (centered u_x)^2."""
    g = grid.u**2 + centered_diff(grid.u, grid.dx) ** 2
    return float(grid.dx * (g.sum() - 0.5 * (g[0] + g[-1])))


def step_rk4_eulerian(grid: EulerianGrid, params: GchParams, dt: float) -> EulerianGrid:
    t, u = grid.t, grid.u
    k1 = rhs_eulerian(grid, params)
    k2 = rhs_eulerian(EulerianGrid(t + 0.5 * dt, grid.x, u + 0.5 * dt * k1), params)
    k3 = rhs_eulerian(EulerianGrid(t + 0.5 * dt, grid.x, u + 0.5 * dt * k2), params)
    k4 = rhs_eulerian(EulerianGrid(t + dt, grid.x, u + dt * k3), params)
    new = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new)):
        raise NumericalBlowup(f"non-finite Eulerian state at t={t + dt:.6g}")
    return EulerianGrid(t + dt, grid.x, new)


def stable_dt(grid: EulerianGrid, params: GchParams, cfl: float = 0.5) -> float:
    speed = float(np.max(np.abs(params.alpha * grid.u + params.beta)))
    # the nonlocal part is bounded, so a rate-1 restriction covers it
    return cfl * min(grid.dx / speed if speed > 0 else math.inf, 1.0)


def integrate_eulerian(u0: EulerianGrid, params: GchParams, t_end: float, dt: float | None = None,
                       snapshot_times=None, snapshot_every: int | None = None) -> list[EulerianGrid]:
    """RK4 snapshots; BreakingImminent propagates when the slope outgrows the grid."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if dt is None:
        # alpha*u may grow; 1.5x head room on the initial speed
        dt = stable_dt(u0, params, cfl=0.5 / 1.5)
    nsteps, snaps = snapshot_steps(t_end, dt, snapshot_times, snapshot_every)
    dt = t_end / nsteps
    snap_set = set(snaps)
    grid = u0.copy()
    out = [grid.copy()] if 0 in snap_set else []
    for step in range(1, nsteps + 1):
        grid = step_rk4_eulerian(grid, params, dt)
        grid.t = step * dt
        if step in snap_set:
            out.append(grid.copy())
    return out


def grid_from_function(fn, half_width: float, dx: float) -> EulerianGrid:
    x = uniform_grid(half_width, dx)
    return EulerianGrid(0.0, x, np.asarray(fn(x), dtype=float))
