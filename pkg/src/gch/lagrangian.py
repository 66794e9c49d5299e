"""Characteristic coordinate: forward transform of initial data and Eulerian reconstruction.

The label of a characteristic is Y = int_0^{x(0)} (1 + u0x^2) dx.  On a uniform
Y-grid the state carries (u, v, xi, x) with v = 2*arctan(u_x) stored unwrapped
and xi = (1 + u_x^2) / Y_x, so that x_Y = xi*cos^2(v/2) and u_Y = xi*sin(v)/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CorruptData, GridTooSmall, OutOfDomain, StateCorrupt
from .model import GchParams, InitialData

EPS_BREAK = 1e-8
TOL_GRID = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Uniform label grid of n points on [-half_width, half_width]."""

    n: int
    half_width: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs n >= 3")
        if not self.half_width > 0:
            raise ValueError("grid half width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)


def auto_half_width(data: InitialData, params: GchParams, t_end: float, margin: float = 10.0) -> float:
    """Truncation half width in Y: data support + margin + finite-speed drift, mapped to labels."""
    lo, hi = data.support()
    energy = data.h1_norm() ** 2
    horizon = math.exp(2.0 * (abs(params.k) + abs(params.lam)) * t_end) * energy
    drift = (abs(params.alpha) * math.sqrt(horizon) + abs(params.beta)) * t_end
    half_x = max(abs(lo), abs(hi)) + margin + drift
    dx = np.diff(data.x)
    g = data.u0x**2
    if data.ux_convention == "linear":
        slope_energy = float(np.sum(0.5 * dx * (g[1:] + g[:-1])))
    else:
        slope_energy = float(np.sum(dx * g[:-1]))
    return half_x + slope_energy


@dataclass
class LagrangianState:
    T: float
    Y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    xi: np.ndarray
    x: np.ndarray

    @property
    def n(self) -> int:
        return self.Y.size

    @property
    def dY(self) -> float:
        return float(self.Y[1] - self.Y[0])

    def copy(self) -> "LagrangianState":
        return LagrangianState(self.T, self.Y.copy(), self.u.copy(), self.v.copy(),
                               self.xi.copy(), self.x.copy())

    def x_Y(self) -> np.ndarray:
        return self.xi * np.cos(0.5 * self.v) ** 2

    def compatibility_defect(self) -> float:
        """max_j |(u[j+1]-u[j])/dY - mean of xi*sin(v)/2 over the two nodes|."""
        w = 0.5 * self.xi * np.sin(self.v)
        return float(np.max(np.abs(np.diff(self.u) / self.dY - 0.5 * (w[1:] + w[:-1]))))

    def check(self, tol_grid: float = TOL_GRID) -> None:
        if not np.all(self.xi > 0):
            raise StateCorrupt(f"xi lost positivity (min {self.xi.min():.3e})")
        if np.any(np.diff(self.x) < -tol_grid):
            raise StateCorrupt("characteristics crossed (x decreasing in Y)")


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """Weights w with sum(w*f) the trapezoid rule on (possibly nonuniform) nodes."""
    d = np.diff(nodes)
    w = np.empty_like(nodes)
    w[0] = 0.5 * d[0]
    w[-1] = 0.5 * d[-1]
    w[1:-1] = 0.5 * (d[1:] + d[:-1])
    return w


def label_table(data: InitialData) -> tuple[np.ndarray, np.ndarray]:
    """(x, Y(x)) with Y(x) = int_0^x (1 + u0x^2), base point 0, extended past the samples."""
    cum = data.energy_density_integral()
    if not np.all(np.isfinite(cum)) or np.any(np.diff(cum) <= 0):
        raise CorruptData("cumulative energy map is not strictly increasing")
    Ytab = cum - np.interp(0.0, data.x, cum)
    # beyond the samples u0 = 0, so Y - x is constant there
    far = 1e6 + abs(data.x[0]) + abs(data.x[-1])
    xs = np.concatenate(([data.x[0] - far], data.x, [data.x[-1] + far]))
    Ys = np.concatenate(([Ytab[0] - far], Ytab, [Ytab[-1] + far]))
    return xs, Ys


def initial_positions(data: InitialData, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Invert Y(0, .) on the uniform grid; returns (Y nodes, x(0, Y))."""
    xs, Ys = label_table(data)
    Y = grid.nodes()
    lo, hi = data.support()
    y_lo, y_hi = np.interp([lo, hi], xs, Ys)
    if Y[0] > y_lo or Y[-1] < y_hi:
        raise GridTooSmall(
            f"label grid [{Y[0]:.4g}, {Y[-1]:.4g}] does not cover the data image [{y_lo:.4g}, {y_hi:.4g}]")
    # np.interp: binary search in the increasing table plus linear interpolation
    return Y, np.interp(Y, Ys, xs)


def forward_transform(data: InitialData, grid: GridSpec) -> LagrangianState:
    """Initial state of the semilinear system on the label grid (xi = 1, T = 0)."""
    Y, x0 = initial_positions(data, grid)
    u = data.value_at(x0)
    v = 2.0 * np.arctan(data.slope_at(x0))
    return LagrangianState(0.0, Y, u, v, np.ones_like(Y), x0)


@dataclass
class EulerianField:
    """Snapshot u(t, .) on the characteristic positions.

    ux and energy_density are NaN where the slope is undefined (breaking).
    """

    t: float
    x: np.ndarray
    u: np.ndarray
    ux: np.ndarray
    energy_density: np.ndarray
    label: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.label is None:
            self.label = np.arange(self.x.size, dtype=float)

    def h1_energy(self) -> float:
        """Trapezoid of u^2 + u_x^2 over x, dropping undefined slopes."""
        ux2 = np.where(np.isfinite(self.ux), self.ux, 0.0) ** 2
        g = self.u**2 + ux2
        return float(np.sum(0.5 * np.diff(self.x) * (g[1:] + g[:-1])))


def reconstruct(state, lam: float = 0.0, eps_break: float = EPS_BREAK,
                tol_grid: float = TOL_GRID) -> EulerianField:
    """Map (x(T, Y), u(T, Y)) back to an Eulerian snapshot.

    Labels whose positions coincide (flat x, i.e. a collapsed interval) are
    merged into one point keeping the first value of u; the slope is only
    reported where cos^2(v/2) > eps_break.  Works for any state exposing
    x, u, v and a time attribute ``T`` or ``t``.
    """
    t = getattr(state, "T", None)
    if t is None:
        t = state.t
    x = np.asarray(state.x)
    dx = np.diff(x)
    if np.any(dx < -tol_grid):
        raise StateCorrupt(f"positions decrease by {-dx.min():.3e} > tol {tol_grid:.1e}")
    keep = np.concatenate(([True], dx > tol_grid))
    c2 = np.cos(0.5 * state.v) ** 2
    defined = c2 > eps_break
    ux = np.full(x.shape, np.nan)
    ux[defined] = np.tan(0.5 * state.v[defined])
    density = math.exp(2.0 * lam * t) * ux**2
    label = getattr(state, "Y", None)
    if label is None:
        label = getattr(state, "eta", np.arange(x.size, dtype=float))
    # a merged group is a point where the slope is not a function value
    group_start = np.nonzero(keep)[0]
    group_len = np.diff(np.append(group_start, x.size))
    ux_out = ux[keep].copy()
    dens_out = density[keep].copy()
    merged = group_len > 1
    ux_out[merged] = np.nan
    dens_out[merged] = np.nan
    return EulerianField(float(t), x[keep].copy(), np.asarray(state.u)[keep].copy(),
                         ux_out, dens_out, np.asarray(label)[keep].copy())


def eval_u_at(field: EulerianField, xq):
    """Piecewise-linear interpolation of u in x."""
    scalar = np.ndim(xq) == 0
    xq = np.asarray(xq, dtype=float)
    if np.any(xq < field.x[0]) or np.any(xq > field.x[-1]):
        raise OutOfDomain(f"query outside [{field.x[0]:.6g}, {field.x[-1]:.6g}]")
    out = np.interp(xq, field.x, field.u)
    return float(out) if scalar else out


def with_time(state: LagrangianState, T: float) -> LagrangianState:
    return replace(state, T=T)
