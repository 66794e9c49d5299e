"""Nonlocal source terms P1, dxP1, P2, dxP2 on a label grid.

With the warped metric c(Y) = int xi cos^2(v/2) dY the convolution with
p = exp(-|x|)/2 becomes

    P[j]   = 1/2 sum_l w_l exp(-|c_j - c_l|) f_l
    dxP[j] = 1/2 (sum_{l>j} - sum_{l<j}) w_l exp(-|c_j - c_l|) f_l

which two exponentially damped scans evaluate in O(n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import StateCorrupt
from .lagrangian import TOL_GRID, trapezoid_weights
from .model import GchParams, eval_h, lipschitz_bound


@dataclass
class SourceTerms:
    P1: np.ndarray
    dxP1: np.ndarray
    P2: np.ndarray
    dxP2: np.ndarray


class KernelWorkspace:
    """Reusable buffers for one grid size.  Not safe to share between threads."""

    def __init__(self, n: int):
        self.n = n
        self.c = np.zeros(n)
        self.forward_scan = np.zeros(n)
        self.backward_scan = np.zeros(n)

    def ensure(self, n: int) -> "KernelWorkspace":
        if n != self.n:
            self.__init__(n)
        return self


@numba.njit(cache=True)
def _cumtrapz(nodes, g, out):
    out[0] = 0.0
    for j in range(nodes.size - 1):
        out[j + 1] = out[j] + 0.5 * (nodes[j + 1] - nodes[j]) * (g[j] + g[j + 1])


@numba.njit(cache=True)
def _scan(c, w, f, fwd, bwd, P, dxP):
    n = c.size
    fwd[0] = 0.0
    for j in range(n - 1):
        fwd[j + 1] = math.exp(-(c[j + 1] - c[j])) * (fwd[j] + w[j] * f[j])
    bwd[n - 1] = 0.0
    for j in range(n - 1, 0, -1):
        bwd[j - 1] = math.exp(-(c[j] - c[j - 1])) * (bwd[j] + w[j] * f[j])
    for j in range(n):
        P[j] = 0.5 * (fwd[j] + bwd[j] + w[j] * f[j])
        dxP[j] = 0.5 * (bwd[j] - fwd[j])


def cumulative_trapezoid(nodes: np.ndarray, g: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    nodes = np.ascontiguousarray(nodes, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    if out is None:
        out = np.empty_like(nodes)
    _cumtrapz(nodes, g, out)
    return out


def kernel_scan(c: np.ndarray, w: np.ndarray, f: np.ndarray,
                ws: KernelWorkspace | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(P, dxP) for arbitrary nondecreasing metric c, weights w and integrand f."""
    n = c.size
    ws = KernelWorkspace(n) if ws is None else ws.ensure(n)
    P = np.empty(n)
    dxP = np.empty(n)
    _scan(np.ascontiguousarray(c, dtype=float), np.ascontiguousarray(w, dtype=float),
          np.ascontiguousarray(f, dtype=float), ws.forward_scan, ws.backward_scan, P, dxP)
    return P, dxP


def kernel_direct(c: np.ndarray, w: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """O(n^2) double sum of the same quadrature; reference for kernel_scan."""
    diff = c[:, None] - c[None, :]
    K = 0.5 * np.exp(-np.abs(diff)) * (w * f)[None, :]
    idx = np.arange(c.size)
    sign = np.sign(idx[None, :] - idx[:, None])
    return K.sum(axis=1), (K * sign).sum(axis=1)


def cumulative_metric(state, ws: KernelWorkspace | None = None, tol_grid: float = TOL_GRID) -> np.ndarray:
    """c[j] = trapezoid integral of xi cos^2(v/2) from Y[0] to Y[j]."""
    g = state.xi * np.cos(0.5 * state.v) ** 2
    if np.any(g < -tol_grid):
        raise StateCorrupt("negative metric density xi*cos^2(v/2)")
    ws = KernelWorkspace(state.Y.size) if ws is None else ws.ensure(state.Y.size)
    cumulative_trapezoid(state.Y, g, ws.c)
    return ws.c


def source_integrands(state, params: GchParams) -> tuple[np.ndarray, np.ndarray]:
    c2 = np.cos(0.5 * state.v) ** 2
    s2 = np.sin(0.5 * state.v) ** 2
    f1 = state.xi * eval_h(params.h, state.u) * c2 + 0.5 * params.alpha * state.xi * s2
    f2 = params.k * state.xi * state.u * c2
    return f1, f2


def compute_sources(state, params: GchParams, ws: KernelWorkspace | None = None) -> SourceTerms:
    ws = KernelWorkspace(state.Y.size) if ws is None else ws.ensure(state.Y.size)
    c = cumulative_metric(state, ws)
    w = trapezoid_weights(state.Y)
    f1, f2 = source_integrands(state, params)
    P1, dxP1 = kernel_scan(c, w, f1, ws)
    if params.k == 0.0:
        zero = np.zeros_like(P1)
        return SourceTerms(P1, dxP1, zero, zero.copy())
    P2, dxP2 = kernel_scan(c, w, f2, ws)
    return SourceTerms(P1, dxP1, P2, dxP2)


def compute_sources_direct(state, params: GchParams) -> SourceTerms:
    """Brute-force O(n^2) version of compute_sources (testing oracle)."""
    g = state.xi * np.cos(0.5 * state.v) ** 2
    c = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(state.Y) * (g[1:] + g[:-1]))))
    w = trapezoid_weights(state.Y)
    f1, f2 = source_integrands(state, params)
    P1, dxP1 = kernel_direct(c, w, f1)
    P2, dxP2 = kernel_direct(c, w, f2)
    return SourceTerms(P1, dxP1, P2, dxP2)


def source_bounds(params: GchParams, energy: float) -> tuple[float, float]:
    """(bound on max|P1|, bound on max|dxP2|) given the energy E."""
    L = lipschitz_bound(params.h, math.sqrt(max(energy, 0.0)))
    p1 = 0.5 * L + 0.25 * (L + abs(params.alpha)) * energy
    dxp2 = 0.5 * abs(params.k) + 0.25 * abs(params.k) * energy
    return p1, dxp2
