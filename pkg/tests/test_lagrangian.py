import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gch.errors import GridTooSmall, OutOfDomain, StateCorrupt
from gch.lagrangian import (EulerianField, GridSpec, LagrangianState, auto_half_width, eval_u_at,
                            forward_transform, label_table, reconstruct)
from gch.model import gaussian, make_preset, peakon, sample_grid, zero_data
from gch.semilinear import integrate


def test_zero_data_is_identity_coordinate():
    s = forward_transform(zero_data(sample_grid(10.0, 0.1)), GridSpec(101, 8.0))
    np.testing.assert_allclose(s.x, s.Y, atol=1e-12)
    assert np.all(s.u == 0) and np.all(s.v == 0) and np.all(s.xi == 1) and s.T == 0


def test_xi_starts_at_one(gauss_data):
    s = forward_transform(gauss_data, GridSpec(257, 20.0))
    assert np.all(s.xi == 1.0)


def _label_exact(x):
    return x + np.sign(x) * (1 - np.exp(-2 * np.abs(x))) / 2


def test_peakon_labels_match_antiderivative():
    pts = np.array([-2.0, -1.0, 1.0, 2.0])
    errs = []
    for h in (4e-2, 2e-2, 1e-2):
        xs, Ys = label_table(peakon(sample_grid(10.0, h)))
        errs.append(np.max(np.abs(np.interp(pts, xs, Ys) - _label_exact(pts))))
    assert errs[-1] < 1e-4
    assert errs[0] > errs[1] > errs[2]


def test_grid_too_small(gauss_data):
    with pytest.raises(GridTooSmall):
        forward_transform(gauss_data, GridSpec(101, 2.0))


def test_reconstruct_zero_state():
    Y = np.linspace(-3, 3, 13)
    s = LagrangianState(2.5, Y, np.zeros(13), np.zeros(13), np.ones(13), Y.copy())
    f = reconstruct(s)
    assert np.all(f.u == 0) and np.all(f.ux == 0)
    np.testing.assert_array_equal(f.x, Y)


def test_reconstruct_collapses_breaking_interval():
    Y = np.linspace(0, 1, 11)
    v = np.zeros(11)
    v[3:8] = math.pi
    x = np.concatenate((Y[:4], np.full(4, Y[3]), Y[3] + (Y[8:] - Y[7])))
    u = np.full(11, 0.3)
    f = reconstruct(LagrangianState(0.0, Y, u, v, np.ones(11), x))
    assert f.x.size == 11 - 4
    assert np.all(np.diff(f.x) > 0)
    # the collapsed point carries no slope
    j = int(np.nonzero(f.x == Y[3])[0][0])
    assert math.isnan(f.ux[j]) and math.isnan(f.energy_density[j])


def test_reconstruct_rejects_crossing():
    Y = np.linspace(0, 1, 5)
    x = Y.copy()
    x[2] = x[1] - 1e-3
    with pytest.raises(StateCorrupt):
        reconstruct(LagrangianState(0.0, Y, np.zeros(5), np.zeros(5), np.ones(5), x))


def test_peakon_transport_reconstruction():
    ch = make_preset("ch")
    data = peakon(sample_grid(40.0, 1e-3))
    grid = GridSpec(2048, auto_half_width(data, ch, 0.5))
    final = integrate(forward_transform(data, grid), ch, 0.5, 2.5e-3).final
    f = reconstruct(final)
    err = np.max(np.abs(f.u - np.exp(-np.abs(f.x - 0.5))))
    assert err <= 5 * grid.spacing


def test_eval_u_at():
    f = EulerianField(0.0, np.array([0.0, 1.0, 2.0]), np.array([1.0, 3.0, 2.0]),
                      np.zeros(3), np.zeros(3))
    assert eval_u_at(f, 1.0) == 3.0
    assert eval_u_at(f, 0.5) == 2.0
    np.testing.assert_allclose(eval_u_at(f, np.array([1.5])), [2.5])
    with pytest.raises(OutOfDomain):
        eval_u_at(f, 2.5)
    z = EulerianField(0.0, np.array([0.0, 1.0]), np.zeros(2), np.zeros(2), np.zeros(2))
    assert eval_u_at(z, 0.37) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 1.5), st.floats(0.5, 2.0), st.floats(-1.0, 1.0))
def test_roundtrip_at_time_zero(amp, width, center):
    data = gaussian(sample_grid(15.0, 1e-2), amp, width, center)
    s = forward_transform(data, GridSpec(4001, auto_half_width(data, make_preset("ch"), 0.0)))
    f = reconstruct(s)
    inside = (data.x > f.x[0]) & (data.x < f.x[-1])
    got = eval_u_at(f, data.x[inside])
    # linear interpolation on both sides: bound by h^2/8 max|u''| for each grid
    h = max(np.max(np.diff(f.x)), 1e-2)
    tol = 2 * (h * h / 8) * 2 * amp / width**2
    assert np.max(np.abs(got - data.u0[inside])) <= tol


def test_compatibility_and_monotonicity_along_run(ch, gauss_data):
    L = auto_half_width(gauss_data, ch, 1.0)
    defects = []
    for n in (512, 1024):
        traj = integrate(forward_transform(gauss_data, GridSpec(n, L)), ch, 1.0, 5e-3, snapshot_every=20)
        for s in traj.states:
            assert np.all(np.diff(s.x) >= -1e-9)
        defects.append(max(s.compatibility_defect() for s in traj.states))
    assert defects[0] / defects[1] >= 1.6


def test_reconstructed_energy_below_lagrangian(ch, gauss_data):
    L = auto_half_width(gauss_data, ch, 1.0)
    traj = integrate(forward_transform(gauss_data, GridSpec(1024, L)), ch, 1.0, 5e-3, snapshot_every=50)
    for s, rep in traj:
        assert reconstruct(s).h1_energy() <= rep.E * (1 + 1e-4)
