"""Time integration of the semilinear system in the characteristic coordinate.

    u_T  = -dxP1 - P2 - lam*u
    v_T  = -alpha sin^2(v/2) + 2(h(u) - P1 - dxP2) cos^2(v/2) - lam sin v
    xi_T = xi (alpha/2 + h(u) - P1 - dxP2) sin v - 2 lam xi sin^2(v/2)
    x_T  = alpha*u + beta

integrated with classical RK4 at fixed dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import EnergyBoundViolated, NumericalBlowup, StateCorrupt
from .lagrangian import LagrangianState, trapezoid_weights
from .model import GchParams, eval_h, lipschitz_bound
from .nonlocal_terms import KernelWorkspace, SourceTerms, compute_sources

TOL_ENERGY = 1e-4
SourceFn = Callable[[LagrangianState, GchParams], SourceTerms]


@dataclass
class EnergyReport:
    T: float
    E: float
    E_bound: float
    dE_dT_analytic: float
    sup_u: float

    def as_row(self) -> list[float]:
        return [self.T, self.E, self.E_bound, self.dE_dT_analytic, self.sup_u]


def energy(state: LagrangianState, params: GchParams, E0: float | None = None) -> EnergyReport:
    """E = int (u^2 xi cos^2 + xi sin^2) dY by trapezoid, with the analytic rate and bound.

    E0 defaults to E itself, which is only meaningful at T = 0.
    """
    w = trapezoid_weights(state.Y)
    c2 = np.cos(0.5 * state.v) ** 2
    kinetic = float(np.sum(w * state.u**2 * state.xi * c2))
    E = kinetic + float(np.sum(w * state.xi * np.sin(0.5 * state.v) ** 2))
    E0 = E if E0 is None else E0
    bound = math.exp(2.0 * (abs(params.k) + abs(params.lam)) * state.T) * E0
    rate = -2.0 * params.k * kinetic - 2.0 * params.lam * E
    sup_u = float(np.max(np.abs(state.u))) if state.u.size else 0.0
    return EnergyReport(state.T, E, bound, rate, sup_u)


def horizon_energy(params: GchParams, E0: float, t_end: float) -> float:
    """The constant e^{2(|k|+|lam|) t_end} E0 bounding E on [0, t_end]."""
    return math.exp(2.0 * (abs(params.k) + abs(params.lam)) * t_end) * E0


def rate_bound(params: GchParams, E0: float, t_end: float) -> float:
    """Runtime Lipschitz-type bound D on |h-P1-dxP2+alpha/2| and |lam| terms.

    D = |a|/2 + L sqrt(C) + L/2 + (L+|a|)/4 C + |k|/2 + |k|/4 C + 2|lam|,
    with C the horizon energy and L the Lipschitz bound of h on |y| <= sqrt(C).
    """
    C = horizon_energy(params, E0, t_end)
    L = lipschitz_bound(params.h, math.sqrt(C))
    a, k = abs(params.alpha), abs(params.k)
    return (0.5 * a + L * math.sqrt(C) + 0.5 * L + 0.25 * (L + a) * C
            + 0.5 * k + 0.25 * k * C + 2.0 * abs(params.lam))


def auto_dt(params: GchParams, E0: float, t_end: float, cap: float = 0.05) -> float:
    """dt = 0.1 / D, capped so short or trivial runs still take several steps."""
    D = rate_bound(params, E0, t_end)
    return min(cap, 0.1 / D) if D > 0 else cap


def xi_lower_bound(params: GchParams, E0: float, t_end: float, T: float) -> float:
    return math.exp(-rate_bound(params, E0, t_end) * T)


def rhs(state: LagrangianState, params: GchParams, ws: KernelWorkspace | None = None,
        sources: SourceFn | None = None):
    """(du, dv, dxi, dx) at the given state."""
    src = compute_sources(state, params, ws) if sources is None else sources(state, params)
    half = 0.5 * state.v
    c2 = np.cos(half) ** 2
    s2 = np.sin(half) ** 2
    sv = np.sin(state.v)
    hu = eval_h(params.h, state.u)
    lam = params.lam
    q = hu - src.P1 - src.dxP2
    du = -src.dxP1 - src.P2 - lam * state.u
    dv = -params.alpha * s2 + 2.0 * q * c2 - lam * sv
    dxi = state.xi * (0.5 * params.alpha + q) * sv - 2.0 * lam * state.xi * s2
    dx = params.alpha * state.u + params.beta
    return du, dv, dxi, dx


def _shifted(state: LagrangianState, k, a: float, T: float) -> LagrangianState:
    return LagrangianState(T, state.Y, state.u + a * k[0], state.v + a * k[1],
                           state.xi + a * k[2], state.x + a * k[3])


def step_rk4(state: LagrangianState, params: GchParams, dt: float,
             ws: KernelWorkspace | None = None, sources: SourceFn | None = None) -> LagrangianState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    ws = KernelWorkspace(state.n) if ws is None else ws
    T = state.T
    k1 = rhs(state, params, ws, sources)
    k2 = rhs(_shifted(state, k1, 0.5 * dt, T + 0.5 * dt), params, ws, sources)
    k3 = rhs(_shifted(state, k2, 0.5 * dt, T + 0.5 * dt), params, ws, sources)
    k4 = rhs(_shifted(state, k3, dt, T + dt), params, ws, sources)
    w = dt / 6.0
    out = [s + w * (a + 2.0 * b + 2.0 * c + d)
           for s, a, b, c, d in zip((state.u, state.v, state.xi, state.x), k1, k2, k3, k4)]
    if not all(np.all(np.isfinite(a)) for a in out):
        raise NumericalBlowup(f"non-finite state after step to T={T + dt:.6g}")
    return LagrangianState(T + dt, state.Y, *out)


def snapshot_steps(t_end: float, dt: float, snapshot_times: Iterable[float] | None = None,
                   snapshot_every: int | None = None) -> tuple[int, list[int]]:
    """Number of steps (dt shrunk so that nsteps*dt == t_end) and sorted snapshot step indices."""
    nsteps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt_eff = t_end / nsteps
    steps = {0, nsteps}
    if snapshot_times is not None:
        for t in snapshot_times:
            if not 0.0 <= t <= t_end * (1 + 1e-12):
                raise ValueError(f"snapshot time {t} outside [0, {t_end}]")
            steps.add(min(nsteps, int(round(t / dt_eff))))
    if snapshot_every:
        steps.update(range(0, nsteps + 1, int(snapshot_every)))
    return nsteps, sorted(steps)


@dataclass
class Trajectory:
    """Snapshots (state, report) of one run plus the run parameters."""

    params: GchParams
    dt: float
    states: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    solver: str = "lagrangian"

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i], self.reports[i]

    def __iter__(self):
        return iter(zip(self.states, self.reports))

    @property
    def times(self) -> np.ndarray:
        return np.array([getattr(s, "T", getattr(s, "t", None)) for s in self.states])

    @property
    def final(self):
        return self.states[-1]


def integrate(state0: LagrangianState, params: GchParams, t_end: float, dt: float | None = None,
              snapshot_times: Sequence[float] | None = None, snapshot_every: int | None = None,
              tol_energy: float = TOL_ENERGY, check_xi_bound: bool = True,
              sources: SourceFn | None = None,
              monitor: Callable[[LagrangianState, EnergyReport], None] | None = None) -> Trajectory:
    """RK4 from state0 to t_end; snapshots at the nearest completed step.

    Every step checks finiteness, xi > 0 and E <= E_bound (1 + tol_energy);
    ``monitor(state, report)`` is called after every step, including step 0.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    E0 = energy(state0, params).E
    if dt is None:
        dt = auto_dt(params, E0, t_end)
    nsteps, snaps = snapshot_steps(t_end, dt, snapshot_times, snapshot_every)
    dt = t_end / nsteps
    traj = Trajectory(params, dt)
    ws = KernelWorkspace(state0.n)
    state = state0.copy()
    snap_iter = iter(snaps)
    next_snap = next(snap_iter)
    for step in range(nsteps + 1):
        if step > 0:
            state = step_rk4(state, params, dt, ws, sources)
            state.T = step * dt  # avoid accumulated rounding in T
            if not np.all(state.xi > 0):
                raise StateCorrupt(f"xi <= 0 at T={state.T:.6g}")
        rep = energy(state, params, E0)
        if rep.E > rep.E_bound * (1.0 + tol_energy) + 1e-300:
            raise EnergyBoundViolated(
                f"E={rep.E:.12g} exceeds bound {rep.E_bound:.12g} at T={state.T:.6g}")
        if monitor is not None:
            monitor(state, rep)
        if step == next_snap:
            if check_xi_bound and E0 > 0:
                lower = xi_lower_bound(params, E0, t_end, state.T)
                if state.xi.min() < lower * (1.0 - 1e-12):
                    raise StateCorrupt(f"min xi {state.xi.min():.3e} below e^(-D T) = {lower:.3e}")
            traj.states.append(state.copy())
            traj.reports.append(rep)
            next_snap = next(snap_iter, None)
    return traj
