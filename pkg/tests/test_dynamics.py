import numpy as np
import pytest

from slowfast import (PhasePoint, integrate, integrate_fast_layer, parse_hamiltonian,
                      slow_vector_field, step_implicit_midpoint, vector_field_full)
from slowfast.errors import PreconditionError

ROT = parse_hamiltonian("(x^2 + y^2)/2")


def test_vector_field_examples(fold):
    np.testing.assert_allclose(vector_field_full(fold, (0, 0, 0, 0), 0.01), [0, 0, 0.01, 0])
    np.testing.assert_allclose(vector_field_full(ROT, (1, 0, 0, 0), 0.3), [0, -1, 0, 0])
    f = vector_field_full(fold, (0.3, -0.2, 0.1, 0.5), 0.0)
    assert f[2] == 0 and f[3] == 0


def test_negative_epsilon_rejected(fold):
    with pytest.raises(PreconditionError):
        vector_field_full(fold, (0, 0, 0, 0), -1e-3)
    with pytest.raises(PreconditionError):
        PhasePoint(0.0, float("nan"), 0.0, 0.0)


def test_midpoint_preserves_quadratic_invariant():
    z = step_implicit_midpoint(ROT, (1, 0, 0, 0), 0.0, 0.1)
    assert z[0] ** 2 + z[1] ** 2 == pytest.approx(1.0, abs=1e-14)


def test_step_consistency_order_two(fold):
    p = np.array([0.3, 0.2, -0.4, 0.1])
    errs = []
    for h in (1e-2, 5e-3):
        z = step_implicit_midpoint(fold, p, 0.5, h)
        errs.append(np.max(np.abs(z - p - h * vector_field_full(fold, p, 0.5))))
    assert errs[1] < errs[0] / 3.5


def test_critical_point_is_fixed(fold):
    z = step_implicit_midpoint(fold, (1, 0, -3, 0), 0.0, 0.05)
    np.testing.assert_allclose(z, [1, 0, -3, 0], atol=1e-13)
    tr = integrate_fast_layer(fold, (-3, 0), (1, 0), (0, 5), 0.05)
    assert np.max(np.abs(tr.states[:, :2] - [1, 0])) < 1e-13


def test_rotation_energy_long_run():
    tr = integrate(ROT, (1, 0, 0, 0), 0.0, (0, 10), 0.01)
    assert tr.energy_drift() < 1e-12
    assert np.all(np.diff(tr.times) > 0)


def test_constant_model_constant_trajectory():
    tr = integrate(parse_hamiltonian("3"), (0.1, 0.2, 0.3, 0.4), 0.1, (0, 1), 0.1)
    assert np.all(tr.states == [0.1, 0.2, 0.3, 0.4])


def test_layer_orbit_escapes_at_parabolic_point(fold):
    tr = integrate_fast_layer(fold, (0, 0), (0.1, 0), (0, 200), 0.05, escape_radius=1e3)
    assert tr.error is not None
    assert np.max(np.abs(tr.states[:, 0])) > 100


def test_layer_level_sets_conserved(fold):
    # midpoint conserves a cubic H only up to O(h^2): 6e-7 at h = 1e-2
    tr = integrate_fast_layer(fold, (-1.0, 0.2), (0.4, 0.1), (0, 10), 1e-3)
    assert tr.error is None
    assert tr.energy_drift() < 1e-8


def test_layer_step_is_area_preserving(fold):
    p = np.array([0.4, 0.1, -1.0, 0.2])
    h, d = 0.1, 1e-6
    jac = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(4)
        e[k] = d
        plus = step_implicit_midpoint(fold, p + e, 0.0, h)
        minus = step_implicit_midpoint(fold, p - e, 0.0, h)
        jac[:, k] = (plus - minus)[:2] / (2 * d)
    assert np.linalg.det(jac) == pytest.approx(1.0, abs=1e-8)


def test_forward_backward_reversible(fold):
    p = np.array([0.3, 0.2, -0.4, 0.1])
    z = step_implicit_midpoint(fold, p, 0.01, 0.05)
    back = step_implicit_midpoint(fold, z, 0.01, -0.05)
    np.testing.assert_allclose(back, p, atol=1e-10)


def test_backward_time_span(fold):
    tr = integrate(fold, (0.1, 0.05, -0.03, 0), 1e-3, (0, -1), 0.01)
    assert tr.times[-1] == pytest.approx(-1.0)
    assert np.all(np.diff(tr.times) < 0)


def test_energy_error_scales_like_h_squared(fold):
    p0 = (0.6, 0.1, -1.2, 0.0)
    drifts = [integrate(fold, p0, 0.01, (0, 10), h).energy_drift() for h in (0.04, 0.02)]
    ratio = drifts[0] / drifts[1]
    assert 3.0 < ratio < 5.5


def test_tracks_slow_manifold(fold):
    eps, T = 1e-3, 0.5
    tr = integrate(fold, (1, 0, -3, 0), eps, (0, T / eps), 0.1)
    assert tr.error is None
    # slow-flow oracle: du/dt = 1, dv/dt = -x(u) on the branch x = sqrt(-u/3)
    t = tr.slow_times
    u_ref = -3 + t
    x_ref = np.sqrt(-u_ref / 3)
    assert np.max(np.abs(tr.states[:, 2] - u_ref)) < 1e-9
    assert np.max(np.abs(tr.states[:, 0] - x_ref)) < 20 * eps
    _, field, _ = slow_vector_field(fold, tr.states[-1, 2], tr.states[-1, 3],
                                    guess=tr.states[-1, :2])
    assert field[0] == pytest.approx(1.0)


def test_trajectory_csv_header(fold):
    tr = integrate(fold, (0.1, 0, -0.1, 0), 1e-2, (0, 0.1), 0.05)
    text = tr.to_csv()
    assert text.splitlines()[0] == "t,x,y,u,v,H"
    assert '"epsilon": 0.01' in tr.to_json()
