import json

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from slowfast import (CuspLimitSystem, FoldLimitSystem, integrate_painleve_i,
                      integrate_painleve_ii, to_standard_form)
from slowfast.errors import DegenerateCoefficients, PreconditionError

CANON_FOLD = FoldLimitSystem(alpha_c=-1.0, gamma_c=-1.0, s1=-0.5)
CANON_CUSP = CuspLimitSystem(rho=1.0, sigma=1.0, beta=1.0, alpha=1.0)


def test_free_motion():
    sys = FoldLimitSystem(0.0, 0.0, 0.7)
    zs = np.linspace(-1, 3, 9)[1:]
    tr = integrate_painleve_i(sys, (0.3, -0.4, -1.0), 3.0, z_eval=zs)
    np.testing.assert_allclose(tr.X, 0.3 - 2 * 0.7 * -0.4 * (zs + 1), atol=1e-12)
    np.testing.assert_allclose(tr.Y, -0.4, atol=1e-14)


def test_airy_cubic():
    a, x0, y0, z0 = 1.7, 0.2, -0.3, -1.5
    zs = np.linspace(z0, 2.0, 15)[1:]
    tr = integrate_painleve_i(FoldLimitSystem(a, 0.0, -0.5), (x0, y0, z0), 2.0, tol=1e-10,
                              z_eval=zs)
    exact = x0 + y0 * (zs - z0) + a * ((zs ** 3 - z0 ** 3) / 6 - z0 ** 2 * (zs - z0) / 2)
    np.testing.assert_allclose(tr.X, exact, atol=1e-10)


def test_canonical_fold_pole_is_stable():
    poles = [integrate_painleve_i(CANON_FOLD, (0, 0, -5), 5.0, tol=t).pole for t in (1e-8, 1e-10)]
    assert all(p is not None for p in poles)
    assert abs(poles[0]["z_est"] - poles[1]["z_est"]) < 1e-4
    assert isinstance(poles[1]["fit_residual"], float)


def test_pole_estimate_refines():
    z = [integrate_painleve_i(CANON_FOLD, (0, 0, -5), 5.0, tol=t).pole["z_est"]
         for t in (1e-6, 1e-8, 1e-10)]
    assert abs(z[2] - z[1]) < abs(z[1] - z[0])


def test_trajectory_ends_before_pole():
    tr = integrate_painleve_i(CANON_FOLD, (0, 0, -5), 5.0)
    assert np.all(np.diff(tr.z) > 0)
    assert tr.z[-1] < tr.pole["z_est"]
    assert tr.pole["reason"] in ("magnitude", "step_collapse")
    assert tr.to_csv().splitlines()[0] == "z,X,Y"
    assert json.loads(tr.to_json())["pole"]["z_est"] == pytest.approx(tr.pole["z_est"])


@pytest.mark.parametrize("tol", [1e-6, 1e-8])
def test_step_halving_consistency(tol):
    sys = FoldLimitSystem(-1.0, -1.0, -0.5)
    init = (np.sqrt(1 / 3), 0.0, -1.0)
    a = integrate_painleve_i(sys, init, 1.0, tol=tol)
    b = integrate_painleve_i(sys, init, 1.0, tol=tol / 10)
    assert a.pole is None and b.pole is None
    assert np.max(np.abs(a.states[-1] - b.states[-1])) < 10 * tol


def test_tolerance_precondition():
    for tol in (1e-3, 1e-13):
        with pytest.raises(PreconditionError):
            integrate_painleve_i(CANON_FOLD, (0, 0, 0), 1.0, tol=tol)


def test_pii_linear_drift():
    sys = CuspLimitSystem(rho=2.0, sigma=1.0, beta=0.0, alpha=0.0)
    zs = np.array([0.5, 1.0, 2.0])
    tr = integrate_painleve_ii(sys, (0.1, 0.25, 0.0), 2.0, z_eval=zs)
    np.testing.assert_allclose(tr.X, 0.1 - 2.0 * 0.25 * zs, atol=1e-13)
    tr = integrate_painleve_ii(sys, (0.1, 0.25, 0.0), 2.0, z_eval=zs, xdot_constant="sigma")
    np.testing.assert_allclose(tr.X, 0.1 - 0.25 * zs, atol=1e-13)


def test_pii_zero_line_invariant():
    sys = CuspLimitSystem(1.0, 1.0, 0.0, 1.0)
    tr = integrate_painleve_ii(sys, (0.0, 0.0, -5.0), 5.0)
    assert np.max(np.abs(tr.states)) < 1e-12


def test_pii_odd_symmetry():
    zs = np.linspace(-5, 3, 17)[1:]
    a = integrate_painleve_ii(CANON_CUSP, (0.3, -0.2, -5.0), 3.0, z_eval=zs)
    b = integrate_painleve_ii(CANON_CUSP, (-0.3, 0.2, -5.0), 3.0, z_eval=zs)
    np.testing.assert_allclose(a.states, -b.states, atol=1e-9)


def test_pii_offset_sign_branches():
    # A -> -A together with (X, Y) -> (-X, -Y) is a symmetry; record both branches
    zs = np.linspace(-5, 2, 8)[1:]
    runs = {s: integrate_painleve_ii(CANON_CUSP.with_offset(0.5 * s), (0.0, 0.0, -5.0), 2.0,
                                     tol=1e-10, z_eval=zs)
            for s in (1, -1)}
    half = integrate_painleve_ii(CANON_CUSP.with_offset(0.5), (0.0, 0.0, -5.0), 2.0, tol=1e-11,
                                 z_eval=zs)
    assert (runs[1].pole is None) == (runs[-1].pole is None)
    np.testing.assert_allclose(runs[1].states, -runs[-1].states, atol=1e-9)
    np.testing.assert_allclose(runs[1].states, half.states, atol=1e-8)


def test_standard_form_unit_case():
    sys = FoldLimitSystem(alpha_c=1.0, gamma_c=-2.0, s1=-0.5)
    assert (sys.a0, sys.g0) == (-0.5, 1.0)
    sf = to_standard_form(sys)
    assert (sf.lam_x, sf.lam_z) == pytest.approx((-1.0, -1.0))
    assert sf.verify((0.1, 0.0, -1.0), 1.0) < 1e-8


def test_standard_form_idempotent():
    for sys in (CANON_FOLD, CANON_CUSP.with_offset(0.3)):
        std = to_standard_form(sys).standard_system()
        again = to_standard_form(std)
        assert (again.lam_x, again.lam_z) == pytest.approx((1.0, 1.0))
        assert again.parameter == pytest.approx(to_standard_form(sys).parameter)


def test_standard_form_degenerate():
    with pytest.raises(DegenerateCoefficients):
        to_standard_form(FoldLimitSystem(-1.0, 0.0, -0.5))
    with pytest.raises(DegenerateCoefficients):
        to_standard_form(CuspLimitSystem(1.0, 1.0, 0.0, 1.0))


@pytest.mark.parametrize("constant", ["rho", "sigma"])
def test_standard_form_pii_verified(constant):
    sys = CuspLimitSystem(rho=0.8, sigma=1.3, beta=-0.7, alpha=1.1, A=0.2)
    sf = to_standard_form(sys, constant)
    assert sf.verify((0.1, 0.05, -1.0), 1.5) < 1e-8


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.floats(0.3, 2.0),
       st.sampled_from([-1, 1]), st.sampled_from([-1, 1]), st.sampled_from([-1, 1]),
       st.floats(-0.3, 0.3))
def test_standard_form_pi_property(a, g, s, sa, sg, ss, x0):
    sys = FoldLimitSystem(sa * a, sg * g, ss * s)
    sf = to_standard_form(sys)
    try:
        err = sf.verify((x0, 0.0, -0.5), 0.5)
    except PreconditionError:
        assume(False)
    assert err < 1e-8
