import math

import numpy as np
import pytest

from gch.errors import WindowTooSmall
from gch.lagrangian import GridSpec, auto_half_width, forward_transform, trapezoid_weights
from gch.model import GchParams, gaussian, mollify, peakon, sample_grid, steep, zero_data
from gch.semilinear import energy, integrate
from gch.verify import (LinearCombination, TestFunction, balance_law_residual, balance_law_value,
                        breaking_diagnostics, continuous_dependence_check, default_battery,
                        h1_distance, measure_snapshot, pushforward_gap, regularity_check,
                        total_mass, trajectory_fields, weak_form_residual, weak_form_value)


def _run(data, params, n, t_end, dt, every=1):
    L = auto_half_width(data, params, t_end)
    return integrate(forward_transform(data, GridSpec(n, L)), params, t_end, dt, snapshot_every=every)


@pytest.fixture(scope="module")
def zero_traj():
    return _run(zero_data(sample_grid(20.0, 0.05)), GchParams(alpha=1.0, beta=0.3, k=0.2, lam=0.3),
                257, 1.0, 0.05)


@pytest.fixture(scope="module")
def gauss_traj(ch, gauss_data):
    return _run(gauss_data, ch, 2048, 1.0, 4e-3)


def test_zero_solution_residuals_vanish(zero_traj):
    params = zero_traj.params
    for phi in default_battery(1.0) + [TestFunction(0.3, 1.0, 0.2, 0.5, kind="tent")]:
        assert weak_form_value(zero_traj, params, phi) == 0.0
        assert balance_law_value(zero_traj, params, phi) == 0.0


def test_residuals_are_linear_in_phi(gauss_traj):
    params = gauss_traj.params
    F = trajectory_fields(gauss_traj)
    p1, p2 = default_battery(1.0)[1], default_battery(1.0)[3]
    combo = LinearCombination(((2.0, p1), (-0.5, p2)))
    for fn in (weak_form_value, balance_law_value):
        lhs = fn(gauss_traj, params, combo, F)
        rhs = 2.0 * fn(gauss_traj, params, p1, F) - 0.5 * fn(gauss_traj, params, p2, F)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-14)


def test_gaussian_residual_is_small(gauss_traj, rng):
    params = gauss_traj.params
    F = trajectory_fields(gauss_traj)
    for _ in range(5):
        phi = TestFunction(rng.uniform(0.2, 0.8), rng.uniform(-2, 2), 0.2, rng.uniform(0.5, 2.0))
        assert weak_form_residual(gauss_traj, params, phi, F) < 1e-2 * phi.c1_norm()
        assert balance_law_residual(gauss_traj, params, phi, F) < 1e-2 * phi.c1_norm()


def test_window_outside_run_is_rejected(gauss_traj):
    with pytest.raises(WindowTooSmall):
        weak_form_value(gauss_traj, gauss_traj.params, TestFunction(2.0, 0.0, 0.5, 1.0))
    with pytest.raises(WindowTooSmall):
        balance_law_value(gauss_traj, gauss_traj.params, TestFunction(0.5, 1e3, 0.2, 1.0))


def test_peakon_weak_form_away_from_crest(ch):
    data = peakon(sample_grid(40.0, 1e-3))
    phi = TestFunction(0.5, -3.0, 0.45, 1.5)  # the crest travels along x = t
    res = []
    for n, dt in ((1024, 4e-3), (2048, 2e-3), (4096, 1e-3)):
        res.append(weak_form_residual(_run(data, ch, n, 1.0, dt), ch, phi))
    assert res[0] > res[1] > res[2]
    assert res[0] / res[1] >= 1.6 and res[1] / res[2] >= 1.6


def _l2_part(s):
    w = trapezoid_weights(s.Y)
    return float(np.sum(w * s.u**2 * s.xi * np.cos(0.5 * s.v) ** 2))


def test_measure_plus_l2_is_conserved(ch, gauss_traj):
    """mu_t only carries u_x^2; with lam = k = 0 it trades mass with int u^2 and their sum is E."""
    states = gauss_traj.states
    m = np.array([total_mass(s) for s in states])
    total = m + np.array([_l2_part(s) for s in states])
    np.testing.assert_allclose(total, [energy(s, ch).E for s in states], rtol=1e-13)
    assert np.max(np.abs(total / total[0] - 1)) < 1e-4
    assert np.max(np.abs(m / m[0] - 1)) > 1e-3


def test_measure_of_steep_run_and_pushforward(ch):
    data = steep(sample_grid(30.0, 1e-3), 2.0)
    traj = _run(data, ch, 2048, 1.2, 2e-3, every=50)
    E0 = traj.reports[0].E
    for s in traj.states:
        ms = measure_snapshot(s)
        _, lag = pushforward_gap(s)
        assert ms.atom_mass + lag == pytest.approx(total_mass(s), rel=1e-12)
        assert total_mass(s) + _l2_part(s) == pytest.approx(E0, rel=1e-4)
    # node-based x quadrature of u_x^2 only resolves the density before the slope steepens
    for s in traj.states:
        if s.T <= 0.8 + 1e-9:
            ac, lag = pushforward_gap(s)
            assert ac == pytest.approx(lag, rel=1e-3)


def test_breaking_diagnostics_zero(zero_traj):
    rep = breaking_diagnostics(zero_traj)
    assert np.all(rep.breaking_measure == 0) and rep.fraction_breaking == 0.0
    assert np.all(rep.min_xY == 1.0)


def test_breaking_diagnostics_smooth_margin(gauss_traj):
    rep = breaking_diagnostics(gauss_traj)
    assert rep.fraction_breaking == 0.0
    assert rep.min_xY.min() > 0.5
    assert rep.first_time_below(1e-2) is None


def test_regularity_of_zero(zero_traj):
    rep = regularity_check(zero_traj)
    assert rep.holder_x == 0.0 and rep.lipschitz_x == 0.0 and rep.l2_time_quotient == 0.0


def test_peakon_corner_under_refinement(ch):
    data = peakon(sample_grid(40.0, 1e-3))
    reps = [regularity_check(_run(data, ch, n, 0.2, 1e-2, every=5), window=(-8.0, 8.0))
            for n in (1024, 2048, 4096)]
    holder = [r.holder_x for r in reps]
    jump = [r.slope_jump for r in reps]
    assert max(holder) < 1.5 * min(holder)
    assert jump[1] > 1.5 * jump[0] and jump[2] > 1.5 * jump[1]


def test_time_quotient_bounded_for_smooth_run(gauss_traj):
    rep = regularity_check(gauss_traj, window=(-10.0, 10.0))
    assert 0.0 < rep.l2_time_quotient <= rep.l2_time_bound * (1 + 1e-2)


def test_dependence_zero_perturbation(ch):
    data = gaussian(sample_grid(30.0, 1e-3), amp=0.25)
    rep = continuous_dependence_check(data, [data], ch, 0.5, GridSpec(513, 25.0), 1e-2)
    assert rep.data_distances == [0.0] and rep.solution_distances == [0.0]


def test_dependence_mollified_peakon(ch):
    data = peakon(sample_grid(40.0, 1e-3))
    perts = [mollify(data, eps) for eps in (0.2, 0.1, 0.05)]
    rep = continuous_dependence_check(data, perts, ch, 1.0, GridSpec(2048, 45.0), 5e-3)
    assert rep.decreasing_tendency()
    assert rep.solution_distances[0] > rep.solution_distances[1] > rep.solution_distances[2]


def test_dependence_peakon_amplitude(ch):
    x = sample_grid(40.0, 1e-3)
    data = peakon(x)
    perts = [peakon(x, c=1.0 + 1e-3), peakon(x, c=1.0 - 1e-3)]
    rep = continuous_dependence_check(data, perts, ch, 1.0, GridSpec(2048, 45.0), 5e-3)
    for d in rep.solution_distances:
        assert 1e-4 < d < 1e-2
    assert h1_distance(data, perts[0]) == pytest.approx(math.sqrt(2) * 1e-3, rel=1e-2)
