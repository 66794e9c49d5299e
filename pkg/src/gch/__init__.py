"""Generalized Camassa-Holm solvers: characteristic, energy-variable and Eulerian.

Typical use::

    from gch import make_preset, gaussian, sample_grid, GridSpec, forward_transform, integrate
    params = make_preset("ch")
    data = gaussian(sample_grid(30, 1e-3))
    traj = integrate(forward_transform(data, GridSpec(2048, 20.0)), params, t_end=1.0)
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (GchParams, InitialData, NonlinearitySpec, eval_h, from_samples, gaussian,
                    lipschitz_bound, make_preset, mollify, peakon, sample_grid, steep, zero_data)
from .lagrangian import (EulerianField, GridSpec, LagrangianState, auto_half_width, eval_u_at,
                         forward_transform, reconstruct)
from .nonlocal_terms import KernelWorkspace, SourceTerms, compute_sources, cumulative_metric
from .semilinear import EnergyReport, Trajectory, auto_dt, energy, integrate, rhs, step_rk4
from .eta import EtaState, eta_from_initial, integrate_eta, rhs_eta
from .eulerian import EulerianGrid, helmholtz_invert, integrate_eulerian, rhs_eulerian
