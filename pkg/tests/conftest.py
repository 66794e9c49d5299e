import numpy as np
import pytest

from gch.lagrangian import GridSpec, LagrangianState, auto_half_width, forward_transform
from gch.model import gaussian, make_preset, sample_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ch():
    return make_preset("ch")


@pytest.fixture(scope="session")
def gauss_data():
    return gaussian(sample_grid(30.0, 1e-3), amp=0.25, width=1.0)


@pytest.fixture
def gauss_state(ch, gauss_data):
    L = auto_half_width(gauss_data, ch, 1.0)
    return forward_transform(gauss_data, GridSpec(512, L))


def random_state(rng, n, span=4.0, v_scale=2.0, xi_range=(0.5, 1.5), unit_xi=False):
    """Random Lagrangian state with consistent positions x = cumulative xi cos^2(v/2)."""
    Y = np.linspace(-span, span, n)
    u = rng.normal(scale=0.5, size=n)
    v = rng.uniform(-v_scale, v_scale, size=n)
    xi = np.ones(n) if unit_xi else rng.uniform(*xi_range, size=n)
    g = xi * np.cos(0.5 * v) ** 2
    x = Y[0] + np.concatenate(([0.0], np.cumsum(0.5 * np.diff(Y) * (g[1:] + g[:-1]))))
    return LagrangianState(0.0, Y, u, v, xi, x)
