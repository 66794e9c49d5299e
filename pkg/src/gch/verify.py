"""Numerical checks of the weak-solution properties on computed trajectories.

Weak form, for every test function phi on t >= 0:

    int int [-u_x phi_t - (alpha u + beta) u_x phi_x
             + (P1 + dxP2 - h(u) - alpha/2 u_x^2 + lam u_x) phi] dx dt
      - int u0_x phi(0, x) dx = 0

Balance law for the measures mu_t (a.c. part e^{2 lam t} u_x^2 dx):

    int [ int (phi_t + (alpha u + beta) phi_x) dmu_t
          + int 2 e^{2 lam t} (h(u) - P1 - dxP2) u_x phi dx ] dt
      + int u0_x^2 phi(0, x) dx = 0
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import WindowTooSmall
from .eta import EtaState, eta_sources
from .lagrangian import EPS_BREAK, GridSpec, forward_transform, reconstruct, trapezoid_weights
from .model import GchParams, InitialData, eval_h
from .nonlocal_terms import compute_sources
from .semilinear import Trajectory, integrate

# max of |d/ds (1 - s^2)^3| on [-1, 1], attained at s = 1/sqrt(5)
_BUMP_SLOPE = 6.0 / math.sqrt(5.0) * (4.0 / 5.0) ** 2


def _bump(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    q = np.where(inside, 1.0 - s * s, 0.0)
    return q**3, np.where(inside, -6.0 * s * q**2, 0.0)


def _tent(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    return np.where(inside, 1.0 - np.abs(s), 0.0), np.where(inside, -np.sign(s), 0.0)


@dataclass(frozen=True)
class TestFunction:
    """Separable phi(t, x) = b((t - t0)/rt) b((x - x0)/rx), b a (1-s^2)^3 bump or a tent."""

    __test__ = False  # not a pytest class

    t0: float
    x0: float
    rt: float
    rx: float
    kind: str = "bump"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bump", "tent"):
            raise ValueError(f"unknown test function kind {self.kind!r}")
        if not (self.rt > 0 and self.rx > 0):
            raise ValueError("radii must be positive")

    def _profiles(self, t, x):
        b = _bump if self.kind == "bump" else _tent
        bt, dbt = b((t - self.t0) / self.rt)
        bx, dbx = b((np.asarray(x, dtype=float) - self.x0) / self.rx)
        return bt, dbt / self.rt, bx, dbx / self.rx

    def evaluate(self, t: float, x):
        """(phi, phi_t, phi_x) at time t on the points x."""
        bt, dbt, bx, dbx = self._profiles(t, x)
        s = self.scale
        return s * bt * bx, s * dbt * bx, s * bt * dbx

    @property
    def t_support(self) -> tuple[float, float]:
        return max(0.0, self.t0 - self.rt), self.t0 + self.rt

    @property
    def x_support(self) -> tuple[float, float]:
        return self.x0 - self.rx, self.x0 + self.rx

    def c1_norm(self) -> float:
        slope = _BUMP_SLOPE if self.kind == "bump" else 1.0
        return abs(self.scale) * (1.0 + slope / self.rt + slope / self.rx)


@dataclass(frozen=True)
class LinearCombination:
    """sum_i a_i phi_i, with the same interface as TestFunction."""

    terms: tuple

    def evaluate(self, t, x):
        out = [0.0, 0.0, 0.0]
        for a, phi in self.terms:
            for i, arr in enumerate(phi.evaluate(t, x)):
                out[i] = out[i] + a * arr
        return tuple(out)

    @property
    def t_support(self):
        return (min(p.t_support[0] for _, p in self.terms), max(p.t_support[1] for _, p in self.terms))

    @property
    def x_support(self):
        return (min(p.x_support[0] for _, p in self.terms), max(p.x_support[1] for _, p in self.terms))

    def c1_norm(self) -> float:
        return sum(abs(a) * p.c1_norm() for a, p in self.terms)


def default_battery(t_end: float, x_center: float = 0.0, width: float = 2.0) -> list[TestFunction]:
    """Five bumps inside [0, t_end] x [x_center - 3 width, x_center + 3 width]; two touch t = 0."""
    T = t_end
    return [
        TestFunction(0.0, x_center, 0.4 * T, width),
        TestFunction(0.5 * T, x_center, 0.45 * T, width),
        TestFunction(0.5 * T, x_center + width, 0.4 * T, 1.5 * width),
        TestFunction(0.6 * T, x_center - 0.75 * width, 0.35 * T, 0.75 * width),
        TestFunction(0.2 * T, x_center + 0.5 * width, 0.6 * T, 2.0 * width),
    ]


@dataclass
class SnapshotFields:
    """Node values at one snapshot; ux and u_x^2 are zero where the slope is undefined."""

    t: float
    x: np.ndarray
    u: np.ndarray
    ux: np.ndarray
    P1: np.ndarray
    dxP2: np.ndarray
    mu: np.ndarray  # e^{2 lam t}-free mu mass per node: u_x^2 dx in label quadrature
    defined: np.ndarray


def snapshot_fields(state, params: GchParams, eps_break: float = EPS_BREAK) -> SnapshotFields:
    half = 0.5 * state.v
    c2 = np.cos(half) ** 2
    s2 = np.sin(half) ** 2
    defined = c2 > eps_break
    ux = np.where(defined, np.tan(np.where(defined, half, 0.0)), 0.0)
    if isinstance(state, EtaState):
        t = state.t
        src = eta_sources(state, params)
        mu = trapezoid_weights(state.eta) * s2 / state.density(params.lam)
    else:
        t = state.T
        src = compute_sources(state, params)
        mu = trapezoid_weights(state.Y) * state.xi * s2
    return SnapshotFields(float(t), state.x, state.u, ux, src.P1, src.dxP2, mu, defined)


def trajectory_fields(traj: Trajectory, eps_break: float = EPS_BREAK) -> list[SnapshotFields]:
    return [snapshot_fields(s, traj.params, eps_break) for s in traj.states]


def _xtrap(x: np.ndarray, g: np.ndarray) -> float:
    return float(np.sum(0.5 * np.diff(x) * (g[1:] + g[:-1])))


def _ttrap(t: np.ndarray, g: np.ndarray) -> float:
    return float(np.sum(0.5 * np.diff(t) * (g[1:] + g[:-1])))


def _check_window(fields: Sequence[SnapshotFields], phi) -> None:
    t_lo, t_hi = phi.t_support
    if fields[0].t > 0.0 or fields[-1].t < t_hi:
        raise WindowTooSmall(f"test function time support [{t_lo:.4g}, {t_hi:.4g}] exceeds "
                             f"snapshots [{fields[0].t:.4g}, {fields[-1].t:.4g}]")
    x_lo, x_hi = phi.x_support
    for f in fields:
        if f.x[0] > x_lo or f.x[-1] < x_hi:
            raise WindowTooSmall(f"test function space support [{x_lo:.4g}, {x_hi:.4g}] exceeds "
                                 f"[{f.x[0]:.4g}, {f.x[-1]:.4g}] at t={f.t:.4g}")


def _fields(traj_or_fields, params):
    if isinstance(traj_or_fields, Trajectory):
        return trajectory_fields(traj_or_fields)
    return list(traj_or_fields)


def weak_form_value(traj, params: GchParams, phi, fields=None) -> float:
    """Signed weak-form defect (x-trapezoid on the characteristic nodes, t-trapezoid over snapshots)."""
    fields = _fields(traj if fields is None else fields, params)
    _check_window(fields, phi)
    a, b, lam = params.alpha, params.beta, params.lam
    t = np.array([f.t for f in fields])
    inner = np.empty(t.size)
    for i, f in enumerate(fields):
        p, pt, px = phi.evaluate(f.t, f.x)
        g = (-f.ux * pt - (a * f.u + b) * f.ux * px
             + (f.P1 + f.dxP2 - eval_h(params.h, f.u) - 0.5 * a * f.ux**2 + lam * f.ux) * p)
        inner[i] = _xtrap(f.x, g)
    f0 = fields[0]
    p0 = phi.evaluate(0.0, f0.x)[0]
    return _ttrap(t, inner) - _xtrap(f0.x, f0.ux * p0)


def weak_form_residual(traj, params: GchParams, phi, fields=None) -> float:
    return abs(weak_form_value(traj, params, phi, fields))


def balance_law_value(traj, params: GchParams, phi, fields=None, weighted: bool = True) -> float:
    """Signed balance-law defect.

    The measure term is a label-space sum of e^{2 lam t} xi sin^2(v/2) dY
    (atoms included); the source and initial terms are x-trapezoids on the
    nodes.  ``weighted=False`` drops the e^{2 lam t} factor everywhere.
    """
    fields = _fields(traj if fields is None else fields, params)
    _check_window(fields, phi)
    a, b = params.alpha, params.beta
    t = np.array([f.t for f in fields])
    inner = np.empty(t.size)
    for i, f in enumerate(fields):
        wgt = math.exp(2.0 * params.lam * f.t) if weighted else 1.0
        p, pt, px = phi.evaluate(f.t, f.x)
        transport = float(np.sum(wgt * f.mu * (pt + (a * f.u + b) * px)))
        src = 2.0 * wgt * (eval_h(params.h, f.u) - f.P1 - f.dxP2) * f.ux * p
        inner[i] = transport + _xtrap(f.x, src)
    f0 = fields[0]
    p0 = phi.evaluate(0.0, f0.x)[0]
    return _ttrap(t, inner) + _xtrap(f0.x, f0.ux**2 * p0)


def balance_law_residual(traj, params: GchParams, phi, fields=None, weighted: bool = True) -> float:
    return abs(balance_law_value(traj, params, phi, fields, weighted))


@dataclass
class MeasureSnapshot:
    t: float
    atoms: list  # (x_left, x_right, mass)
    x: np.ndarray  # nodes where the density is sampled
    ac_density: np.ndarray

    @property
    def atom_mass(self) -> float:
        return float(sum(m for _, _, m in self.atoms))


def measure_snapshot(state, lam: float = 0.0, eps_break: float = EPS_BREAK) -> MeasureSnapshot:
    """mu_t on the label grid: runs of nodes with cos^2(v/2) <= eps_break become interval atoms."""
    T = state.T
    weight = math.exp(2.0 * lam * T)
    c2 = np.cos(0.5 * state.v) ** 2
    node_mass = weight * trapezoid_weights(state.Y) * state.xi * np.sin(0.5 * state.v) ** 2
    flat = c2 <= eps_break
    atoms = []
    j = 0
    n = flat.size
    while j < n:
        if flat[j]:
            k = j
            while k + 1 < n and flat[k + 1]:
                k += 1
            atoms.append((float(state.x[j]), float(state.x[k]), float(node_mass[j:k + 1].sum())))
            j = k + 1
        else:
            j += 1
    keep = ~flat
    ux = np.tan(0.5 * state.v[keep])
    return MeasureSnapshot(float(T), atoms, state.x[keep].copy(), weight * ux**2)


def total_mass(state, lam: float = 0.0) -> float:
    """mu_t(R) = e^{2 lam T} int xi sin^2(v/2) dY."""
    w = trapezoid_weights(state.Y)
    return math.exp(2.0 * lam * state.T) * float(np.sum(w * state.xi * np.sin(0.5 * state.v) ** 2))


def pushforward_gap(state, lam: float = 0.0, eps_break: float = EPS_BREAK) -> tuple[float, float]:
    """(x-integral of the a.c. density, label integral over non-flat nodes)."""
    ms = measure_snapshot(state, lam, eps_break)
    c2 = np.cos(0.5 * state.v) ** 2
    keep = c2 > eps_break
    w = trapezoid_weights(state.Y)
    lag = math.exp(2.0 * lam * state.T) * float(
        np.sum((w * state.xi * np.sin(0.5 * state.v) ** 2)[keep]))
    return _xtrap(ms.x, ms.ac_density), lag


@dataclass
class BreakingReport:
    times: np.ndarray
    breaking_measure: np.ndarray
    min_xY: np.ndarray

    @property
    def fraction_breaking(self) -> float:
        return float(np.mean(self.breaking_measure > 0)) if self.times.size else 0.0

    def first_time_below(self, level: float) -> float | None:
        idx = np.nonzero(self.min_xY < level)[0]
        return float(self.times[idx[0]]) if idx.size else None

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "breaking_measure": self.breaking_measure.tolist(),
                "min_xY": self.min_xY.tolist(), "fraction_breaking": self.fraction_breaking}


def breaking_diagnostics(traj: Trajectory, eps_break: float = EPS_BREAK) -> BreakingReport:
    times, meas, mins = [], [], []
    for s in traj.states:
        c2 = np.cos(0.5 * s.v) ** 2
        times.append(s.T)
        meas.append(float(np.count_nonzero(c2 < eps_break)) * s.dY)
        mins.append(float(np.min(s.xi * c2)))
    return BreakingReport(np.array(times), np.array(meas), np.array(mins))


@dataclass
class RegularityReport:
    holder_x: float
    lipschitz_x: float
    slope_jump: float
    l2_time_quotient: float
    l2_time_bound: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _holder(x: np.ndarray, u: np.ndarray, exponent: float, max_offset: int) -> float:
    best = 0.0
    for k in range(1, min(max_offset, x.size - 1) + 1):
        dx = x[k:] - x[:-k]
        ok = dx > 0
        if np.any(ok):
            best = max(best, float(np.max(np.abs(u[k:] - u[:-k])[ok] / dx[ok] ** exponent)))
    return best


def regularity_check(traj: Trajectory, eps_break: float = EPS_BREAK, max_offset: int = 256,
                     window: tuple[float, float] | None = None, n_common: int = 4001) -> RegularityReport:
    """Empirical regularity quotients over the snapshots.

    holder_x       sup |u(x)-u(y)| / |x-y|^{1/2} over node pairs up to max_offset apart
    lipschitz_x    same with exponent 1
    slope_jump     sup |u_x(x)-u_x(y)| / |x-y| over neighbouring nodes with defined slope
    l2_time_*      L2 difference quotient of consecutive snapshots and the bound
                   ||(alpha u + beta) u_x||_2 + ||dxP1 + P2 + lam u||_2 (max over snapshots)
    """
    if len(traj) < 3:
        raise ValueError("regularity_check needs at least three snapshots")
    params = traj.params
    fields = [reconstruct(s, params.lam, eps_break) for s in traj.states]
    holder = max(_holder(f.x, f.u, 0.5, max_offset) for f in fields)
    lips = max(_holder(f.x, f.u, 1.0, max_offset) for f in fields)
    jump = 0.0
    for f in fields:
        ok = np.isfinite(f.ux)
        x, ux = f.x[ok], f.ux[ok]
        dx = np.diff(x)
        if dx.size:
            jump = max(jump, float(np.max(np.abs(np.diff(ux)) / dx)))
    if window is None:
        window = (max(f.x[0] for f in fields), min(f.x[-1] for f in fields))
    xc = np.linspace(window[0], window[1], n_common)
    us = [np.interp(xc, f.x, f.u) for f in fields]
    dxc = xc[1] - xc[0]
    quotient = 0.0
    for i in range(1, len(fields)):
        dt = fields[i].t - fields[i - 1].t
        if dt > 0:
            quotient = max(quotient, math.sqrt(dxc * float(np.sum((us[i] - us[i - 1]) ** 2))) / dt)
    bound = 0.0
    for s in traj.states:
        if isinstance(s, EtaState):
            src = eta_sources(s, params)
        else:
            src = compute_sources(s, params)
        half = 0.5 * s.v
        c2 = np.cos(half) ** 2
        ok = c2 > eps_break
        ux = np.where(ok, np.tan(np.where(ok, half, 0.0)), 0.0)
        transport = (params.alpha * s.u + params.beta) * ux
        local = src.dxP1 + src.P2 + params.lam * s.u
        bound = max(bound, math.sqrt(_xtrap(s.x, transport**2)) + math.sqrt(_xtrap(s.x, local**2)))
    return RegularityReport(holder, lips, jump, quotient, bound)


@dataclass
class DependenceReport:
    data_distances: list
    solution_distances: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def decreasing_tendency(self) -> bool:
        """Solution distances shrink from the largest to the smallest perturbation."""
        order = np.argsort(self.data_distances)[::-1]
        d = np.asarray(self.solution_distances)[order]
        return bool(d[-1] <= d[0])


def h1_distance(a: InitialData, b: InitialData) -> float:
    x = np.union1d(a.x, b.x)
    du = a.value_at(x) - b.value_at(x)
    dux = a.slope_at(x) - b.slope_at(x)
    return math.sqrt(_xtrap(x, du**2 + dux**2))


def continuous_dependence_check(data0: InitialData, perturbations: Sequence[InitialData],
                                params: GchParams, t_end: float, grid: GridSpec,
                                dt: float | None = None,
                                window: tuple[float, float] = (-10.0, 10.0),
                                n_window: int = 4001) -> DependenceReport:
    """Max-norm distance at t_end on a fixed window between the base and each perturbed run."""
    xq = np.linspace(window[0], window[1], n_window)

    def solve(d):
        traj = integrate(forward_transform(d, grid), params, t_end, dt)
        f = reconstruct(traj.final, params.lam)
        return np.interp(xq, f.x, f.u)

    base = solve(data0)
    data_d, sol_d = [], []
    for pert in perturbations:
        data_d.append(h1_distance(data0, pert))
        sol_d.append(float(np.max(np.abs(solve(pert) - base))))
    return DependenceReport(data_d, sol_d)


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float | None
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance,
                "passed": self.passed, "detail": self.detail}
