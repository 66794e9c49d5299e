"""Second solver in the energy variable eta = x + mu_t((-inf, x)).

Each grid node is a characteristic carrying its own label eta_j(t), advected
by deta/dt = G.  With D = cos^2(v/2) + e^{2 lam t} sin^2(v/2):

    x_eta = cos^2(v/2) / D,     u_x dx = sin(v) / (2 D) deta,
    u_x^2 dx = sin^2(v/2) / D deta,

so the nonlocal terms reuse the exponential scan of ``nonlocal_terms`` with
trapezoid weights on the (nonuniform) labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EnergyBoundViolated, NumericalBlowup
from .lagrangian import EPS_BREAK, GridSpec, initial_positions, trapezoid_weights
from .model import GchParams, InitialData, eval_h
from .nonlocal_terms import KernelWorkspace, SourceTerms, cumulative_trapezoid, kernel_scan
from .semilinear import TOL_ENERGY, EnergyReport, Trajectory, auto_dt, snapshot_steps


@dataclass
class EtaState:
    t: float
    eta: np.ndarray
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def n(self) -> int:
        return self.eta.size

    def copy(self) -> "EtaState":
        return EtaState(self.t, self.eta.copy(), self.x.copy(), self.u.copy(), self.v.copy())

    def density(self, lam: float) -> np.ndarray:
        return np.cos(0.5 * self.v) ** 2 + math.exp(2.0 * lam * self.t) * np.sin(0.5 * self.v) ** 2

    def x_eta(self, lam: float, eps_break: float = EPS_BREAK) -> np.ndarray:
        """Analytic x_eta = cos^2(v/2)/D, set to 0 where it falls below eps_break."""
        g = np.cos(0.5 * self.v) ** 2 / self.density(lam)
        return np.where(g > eps_break, g, 0.0)


def eta_from_initial(data: InitialData, grid: GridSpec) -> EtaState:
    """At t = 0 the energy variable coincides with the characteristic label (base point 0)."""
    eta, x0 = initial_positions(data, grid)
    u = data.value_at(x0)
    v = 2.0 * np.arctan(data.slope_at(x0))
    return EtaState(0.0, eta, x0, u, v)


def eta_sources(state: EtaState, params: GchParams, ws: KernelWorkspace | None = None,
                eps_break: float = EPS_BREAK) -> SourceTerms:
    ws = KernelWorkspace(state.n) if ws is None else ws.ensure(state.n)
    D = state.density(params.lam)
    c = cumulative_trapezoid(state.eta, state.x_eta(params.lam, eps_break), ws.c)
    w = trapezoid_weights(state.eta)
    c2 = np.cos(0.5 * state.v) ** 2
    s2 = np.sin(0.5 * state.v) ** 2
    f1 = (eval_h(params.h, state.u) * c2 + 0.5 * params.alpha * s2) / D
    P1, dxP1 = kernel_scan(c, w, f1, ws)
    if params.k == 0.0:
        zero = np.zeros_like(P1)
        return SourceTerms(P1, dxP1, zero, zero.copy())
    P2, dxP2 = kernel_scan(c, w, params.k * state.u * c2 / D, ws)
    return SourceTerms(P1, dxP1, P2, dxP2)


def rhs_eta(state: EtaState, params: GchParams, ws: KernelWorkspace | None = None):
    """(deta, dx, du, dv); deta = G is the label velocity."""
    src = eta_sources(state, params, ws)
    D = state.density(params.lam)
    q = eval_h(params.h, state.u) - src.P1 - src.dxP2
    c2 = np.cos(0.5 * state.v) ** 2
    # G = beta + int_{-inf}^{x} [alpha + 2 e^{2 lam t} q] u_x dx; the alpha part is alpha*u exactly
    flux = 2.0 * math.exp(2.0 * params.lam * state.t) * q * 0.5 * np.sin(state.v) / D
    G = params.beta + params.alpha * state.u + cumulative_trapezoid(state.eta, flux)
    dx = params.alpha * state.u + params.beta
    du = -src.dxP1 - src.P2 - params.lam * state.u
    dv = 2.0 * (q + 0.5 * params.alpha) * c2 - params.lam * np.sin(state.v) - params.alpha
    return G, dx, du, dv


def eta_energy(state: EtaState, params: GchParams, E0: float | None = None) -> EnergyReport:
    """E(t) = int (u^2 + u_x^2) dx over the characteristics, in eta quadrature.

    With x_eta = cos^2/D and u_x^2 x_eta = sin^2/D this is the same energy as
    the Lagrangian solver reports; it obeys the same bound.
    """
    w = trapezoid_weights(state.eta)
    D = state.density(params.lam)
    c2 = np.cos(0.5 * state.v) ** 2
    kinetic = float(np.sum(w * state.u**2 * c2 / D))
    E = kinetic + float(np.sum(w * np.sin(0.5 * state.v) ** 2 / D))
    E0 = E if E0 is None else E0
    bound = math.exp(2.0 * (abs(params.k) + abs(params.lam)) * state.t) * E0
    rate = -2.0 * params.k * kinetic - 2.0 * params.lam * E
    return EnergyReport(state.t, E, bound, rate, float(np.max(np.abs(state.u))))


def step_rk4_eta(state: EtaState, params: GchParams, dt: float,
                 ws: KernelWorkspace | None = None) -> EtaState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    ws = KernelWorkspace(state.n) if ws is None else ws
    y0 = (state.eta, state.x, state.u, state.v)

    def at(k, a, t):
        return EtaState(t, *(y + a * dy for y, dy in zip(y0, k)))

    t = state.t
    k1 = rhs_eta(state, params, ws)
    k2 = rhs_eta(at(k1, 0.5 * dt, t + 0.5 * dt), params, ws)
    k3 = rhs_eta(at(k2, 0.5 * dt, t + 0.5 * dt), params, ws)
    k4 = rhs_eta(at(k3, dt, t + dt), params, ws)
    w = dt / 6.0
    out = [y + w * (a + 2.0 * b + 2.0 * c + d) for y, a, b, c, d in zip(y0, k1, k2, k3, k4)]
    if not all(np.all(np.isfinite(a)) for a in out):
        raise NumericalBlowup(f"non-finite eta state after step to t={t + dt:.6g}")
    return EtaState(t + dt, *out)


def integrate_eta(state0: EtaState, params: GchParams, t_end: float, dt: float | None = None,
                  snapshot_times=None, snapshot_every: int | None = None,
                  tol_energy: float = TOL_ENERGY) -> Trajectory:
    """RK4 with the same stepping, snapshot and energy-bound policy as the Lagrangian solver."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    E0 = eta_energy(state0, params).E
    if dt is None:
        dt = auto_dt(params, E0, t_end)
    nsteps, snaps = snapshot_steps(t_end, dt, snapshot_times, snapshot_every)
    dt = t_end / nsteps
    traj = Trajectory(params, dt, solver="eta")
    ws = KernelWorkspace(state0.n)
    state = state0.copy()
    snap_set = set(snaps)
    for step in range(nsteps + 1):
        if step > 0:
            state = step_rk4_eta(state, params, dt, ws)
            state.t = step * dt
        rep = eta_energy(state, params, E0)
        if rep.E > rep.E_bound * (1.0 + tol_energy) + 1e-300:
            raise EnergyBoundViolated(
                f"E={rep.E:.12g} exceeds bound {rep.E_bound:.12g} at t={state.t:.6g}")
        if step in snap_set:
            traj.states.append(state.copy())
            traj.reports.append(rep)
    return traj


def label_lipschitz(state: EtaState) -> tuple[float, float]:
    """(max dx/deta, max |du|/deta) over neighbouring labels."""
    d_eta = np.diff(state.eta)
    return (float(np.max(np.diff(state.x) / d_eta)),
            float(np.max(np.abs(np.diff(state.u)) / d_eta)))
