"""Model constants, the nonlinearity h, presets and initial data.

The generalized Camassa-Holm equation solved throughout the package is

    u_t + (alpha*u + beta)*u_x + d/dx p*(h(u) + alpha/2 u_x^2) + k p*u + lam*u = 0,

with p(x) = exp(-|x|)/2 and h a polynomial vanishing at the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CorruptData, UnknownPreset

__all__ = [
    "NonlinearitySpec", "GchParams", "InitialData", "make_preset", "eval_h",
    "lipschitz_bound", "PRESETS", "gaussian", "peakon", "steep", "zero_data",
    "from_samples", "mollify",
]


@dataclass(frozen=True)
class NonlinearitySpec:
    """Polynomial h(u) = sum_i coefficients[i-1] * u**i, i >= 1.

    The constant term is structurally absent, so h(0) == 0 exactly.  `name`
    is informational (set by named presets).
    """

    coefficients: tuple[float, ...] = ()
    name: str | None = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("h coefficients must be finite")
        # trailing zeros carry no information and would inflate the degree
        while coeffs and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def named(cls, name: str) -> "NonlinearitySpec":
        try:
            coeffs = _NAMED_H[name]
        except KeyError:
            raise UnknownPreset(f"unknown nonlinearity {name!r}") from None
        return cls(coeffs, name=name)

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    def __call__(self, u):
        return eval_h(self, u)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        acc = np.zeros_like(u)
        for i in range(self.degree, 0, -1):
            acc = acc * u + i * self.coefficients[i - 1]
        return acc


_NAMED_H = {
    "zero": (),
    "linear": (1.0,),
    "square": (0.0, 1.0),
    "ch": (0.0, 1.0),
}


@dataclass(frozen=True)
class GchParams:
    alpha: float = 1.0
    beta: float = 0.0
    k: float = 0.0
    lam: float = 0.0
    h: NonlinearitySpec = field(default_factory=lambda: NonlinearitySpec.named("ch"))

    def __post_init__(self):
        for name in ("alpha", "beta", "k", "lam"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if eval_h(self.h, 0.0) != 0.0:
            raise ValueError("h(0) must vanish")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "k": self.k,
                "lam": self.lam, "h_coefficients": list(self.h.coefficients),
                "h_name": self.h.name}

    @classmethod
    def from_dict(cls, d: dict) -> "GchParams":
        h = NonlinearitySpec(tuple(d.get("h_coefficients", (0.0, 1.0))), d.get("h_name"))
        return cls(d.get("alpha", 1.0), d.get("beta", 0.0), d.get("k", 0.0),
                   d.get("lam", 0.0), h)


def eval_h(spec: NonlinearitySpec, u):
    """Evaluate h by Horner's rule; scalar in, float out; array in, array out."""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    acc = np.zeros_like(u)
    for c in reversed(spec.coefficients):
        acc = (acc + c) * u
    return float(acc) if scalar else acc


def lipschitz_bound(spec: NonlinearitySpec, M: float) -> float:
    """Upper bound of |h'(y)| on |y| <= M: sum_i |c_i| * i * M**(i-1)."""
    if M < 0:
        raise ValueError("M must be non-negative")
    total = 0.0
    for i, c in enumerate(spec.coefficients, start=1):
        if c == 0.0:
            continue
        total += abs(c) * i * (M ** (i - 1) if i > 1 else 1.0)
    return total


PRESETS = ("ch", "ch-dissipative", "ch-forced", "rch")


def make_preset(name: str, **kw) -> GchParams:
    """Parameters that reduce the general equation to a classical model.

    ``ch``                 Camassa-Holm in nonlocal form.
    ``ch-dissipative``     adds lam*u, keyword ``lam``.
    ``ch-forced``          adds k p*u, keyword ``k``.
    ``rch``                rotation-Camassa-Holm; keywords ``c, beta0, beta,
                           omega1, omega2, alpha`` where ``alpha`` is the
                           R-CH scaling constant (the transport coefficient of
                           the general equation stays 1).
    """
    ch_h = NonlinearitySpec.named("ch")
    if name == "ch":
        return GchParams(1.0, 0.0, 0.0, 0.0, ch_h)
    if name == "ch-dissipative":
        return GchParams(1.0, 0.0, 0.0, float(kw.get("lam", 0.0)), ch_h)
    if name == "ch-forced":
        return GchParams(1.0, 0.0, float(kw.get("k", 0.0)), 0.0, ch_h)
    if name == "rch":
        c = float(kw.get("c", 1.0))
        beta0 = float(kw.get("beta0", 0.0))
        beta = float(kw.get("beta", 1.0))
        om1 = float(kw.get("omega1", 0.0))
        om2 = float(kw.get("omega2", 0.0))
        a = float(kw.get("alpha", 1.0))
        if beta == 0.0 or a == 0.0:
            raise ValueError("rch needs nonzero beta and alpha")
        shift = beta0 / beta
        h = NonlinearitySpec((c - shift, 1.0, om1 / (3 * a**2), om2 / (4 * a**3)), name="rch")
        return GchParams(1.0, shift, 0.0, 0.0, h)
    raise UnknownPreset(f"unknown preset {name!r}; choose from {PRESETS}")


@dataclass
class InitialData:
    """Samples of u0 and its derivative.

    ux_convention
        ``"linear"``: u0x holds nodal derivative values, linearly interpolated.
        ``"constant"``: u0x[i] is the slope on [x[i], x[i+1]] (u0 piecewise
        linear); the last entry is ignored.
    """

    x: np.ndarray
    u0: np.ndarray
    u0x: np.ndarray
    ux_convention: str = "linear"
    description: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.u0 = np.asarray(self.u0, dtype=float)
        self.u0x = np.asarray(self.u0x, dtype=float)
        if self.ux_convention not in ("linear", "constant"):
            raise ValueError(f"unknown ux_convention {self.ux_convention!r}")
        if not (self.x.ndim == 1 and self.x.shape == self.u0.shape == self.u0x.shape):
            raise CorruptData("x, u0, u0x must be 1-D arrays of equal length")
        if self.x.size < 2:
            raise CorruptData("need at least two samples")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.u0))
                and np.all(np.isfinite(self.u0x))):
            raise CorruptData("samples must be finite")
        if np.any(np.diff(self.x) <= 0):
            raise CorruptData("x samples must be strictly increasing")

    def slope_at(self, xq):
        """u0x evaluated at xq under the declared convention (0 outside)."""
        xq = np.asarray(xq, dtype=float)
        if self.ux_convention == "linear":
            return np.interp(xq, self.x, self.u0x, left=0.0, right=0.0)
        idx = np.searchsorted(self.x, xq, side="right") - 1
        inside = (idx >= 0) & (idx < self.x.size - 1)
        out = np.zeros_like(xq)
        out[inside] = self.u0x[idx[inside]]
        return out

    def value_at(self, xq):
        return np.interp(np.asarray(xq, dtype=float), self.x, self.u0, left=0.0, right=0.0)

    def energy_density_integral(self) -> np.ndarray:
        """Cumulative integral of 1 + u0x^2 from x[0] (trapezoid or exact cell sums)."""
        dx = np.diff(self.x)
        if self.ux_convention == "linear":
            g = 1.0 + self.u0x**2
            cells = 0.5 * dx * (g[1:] + g[:-1])
        else:
            cells = dx * (1.0 + self.u0x[:-1] ** 2)
        return np.concatenate(([0.0], np.cumsum(cells)))

    def absolute_continuity_defect(self) -> float:
        """max |u0 - u0[0] - int u0x| over the samples."""
        dx = np.diff(self.x)
        if self.ux_convention == "linear":
            cells = 0.5 * dx * (self.u0x[1:] + self.u0x[:-1])
        else:
            cells = dx * self.u0x[:-1]
        integral = np.concatenate(([0.0], np.cumsum(cells)))
        return float(np.max(np.abs(self.u0 - self.u0[0] - integral)))

    def h1_norm(self) -> float:
        dx = np.diff(self.x)
        g = self.u0**2 + self.u0x**2
        return math.sqrt(float(np.sum(0.5 * dx * (g[1:] + g[:-1]))))

    def validate(self, tol: float | None = None) -> None:
        """Check absolute continuity; the default tolerance is a trapezoid error estimate.

        For nodal slopes the quadrature error of int u0x is about
        span * h^2 / 12 * max|u0_xxx|, the third derivative taken from second
        differences of u0x.
        """
        if tol is None:
            h = float(np.max(np.diff(self.x)))
            curv = 0.0
            if self.ux_convention == "linear" and self.x.size > 2:
                d1 = np.diff(self.u0x) / np.diff(self.x)
                curv = float(np.max(np.abs(np.diff(d1) / (0.5 * (self.x[2:] - self.x[:-2])))))
            span = float(self.x[-1] - self.x[0])
            tol = 1e-9 * (1.0 + float(np.max(np.abs(self.u0)))) + 2.0 * span * h * h / 12.0 * curv
        defect = self.absolute_continuity_defect()
        if not defect <= tol:
            raise CorruptData(f"u0 is not the integral of u0x (defect {defect:.3e} > {tol:.3e})")
        if not math.isfinite(self.h1_norm()):
            raise CorruptData("H1 norm is not finite")

    def support(self, threshold: float = 1e-12) -> tuple[float, float]:
        """Smallest interval outside which |u0| and |u0x| stay below threshold*max."""
        mag = np.maximum(np.abs(self.u0), np.abs(self.u0x))
        peak = float(mag.max())
        if peak == 0.0:
            return 0.0, 0.0
        idx = np.nonzero(mag > threshold * peak)[0]
        return float(self.x[idx[0]]), float(self.x[idx[-1]])


def sample_grid(half_width: float, spacing: float) -> np.ndarray:
    """Symmetric sample grid with 0 as a node."""
    m = int(math.ceil(half_width / spacing))
    return spacing * np.arange(-m, m + 1, dtype=float)


def gaussian(x, amp: float = 0.25, width: float = 1.0, center: float = 0.0) -> InitialData:
    x = np.asarray(x, dtype=float)
    s = (x - center) / width
    u = amp * np.exp(-s * s)
    return InitialData(x, u, -2.0 * s / width * u, description=f"gaussian({amp}, {width}, {center})")


def peakon(x, c: float = 1.0, center: float = 0.0) -> InitialData:
    """c*exp(-|x-center|) as its piecewise-linear interpolant on x.

    Cell slopes keep the corner sharp when the crest is a sample point;
    nodal slopes would smear it over two cells and lose O(spacing) energy.
    """
    x = np.asarray(x, dtype=float)
    u = c * np.exp(-np.abs(x - center))
    slopes = np.append(np.diff(u) / np.diff(x), 0.0)
    return InitialData(x, u, slopes, "constant", f"peakon({c}, {center})")


def steep(x, amp: float = 2.0) -> InitialData:
    """-amp * x * exp(-x^2): slope -amp at the origin."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-x * x)
    return InitialData(x, -amp * x * e, -amp * (1.0 - 2.0 * x * x) * e, description=f"steep({amp})")


def zero_data(x) -> InitialData:
    x = np.asarray(x, dtype=float)
    return InitialData(x, np.zeros_like(x), np.zeros_like(x), description="zero")


def from_samples(x: Sequence[float], u0: Sequence[float], u0x: Sequence[float] | None = None) -> InitialData:
    """Data from raw samples; without u0x the piecewise-linear slopes are used."""
    x = np.asarray(x, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if u0x is not None:
        return InitialData(x, u0, np.asarray(u0x, dtype=float), "linear", "samples")
    slopes = np.diff(u0) / np.diff(x)
    return InitialData(x, u0, np.append(slopes, 0.0), "constant", "samples")


def mollify(data: InitialData, eps: float) -> InitialData:
    """Convolve u0 and u0x with a normalized Gaussian of width eps on the sample grid.

    Requires uniform samples.  Smoothing commutes with differentiation, so the
    result stays absolutely continuous; ||mollify(d, eps) - d||_H1 -> 0 as eps -> 0.
    """
    if eps <= 0:
        return InitialData(data.x.copy(), data.u0.copy(), data.u0x.copy(), data.ux_convention, data.description)
    dx = np.diff(data.x)
    h = float(dx[0])
    if not np.allclose(dx, h, rtol=1e-9, atol=0.0):
        raise ValueError("mollify needs uniformly spaced samples")
    m = int(math.ceil(6.0 * eps / h))
    s = h * np.arange(-m, m + 1)
    kern = np.exp(-0.5 * (s / eps) ** 2)
    kern /= kern.sum()
    u = np.convolve(data.u0, kern, mode="same")
    ux = np.convolve(data.u0x, kern, mode="same")
    return InitialData(data.x.copy(), u, ux, data.ux_convention, f"mollify({data.description}, {eps})")
