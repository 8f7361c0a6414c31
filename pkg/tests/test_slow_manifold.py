import numpy as np
import pytest

from slowfast import (Classification, classify_singular_point, delta, parse_hamiltonian,
                      slow_hamiltonian, slow_vector_field, sm_chart, solve_critical_point,
                      trace_singular_curve)
from slowfast.errors import ChartInvalid, NotOnSM, PreconditionError, SingularJacobian
from slowfast.slow_manifold import CHARTS

QUINTIC = parse_hamiltonian("v + u*x + x^5 + y^2/2")


def test_critical_point_branches(fold):
    assert solve_critical_point(fold, -3, 0, (0.9, 0.1)) == pytest.approx((1, 0), abs=1e-12)
    assert solve_critical_point(fold, -3, 0, (-0.9, 0)) == pytest.approx((-1, 0), abs=1e-12)
    rot = parse_hamiltonian("(x^2 + y^2)/2")
    assert solve_critical_point(rot, 0.7, -2.0, (0.3, 0.3)) == pytest.approx((0, 0), abs=1e-12)


def test_critical_point_at_fold_is_singular(fold):
    with pytest.raises(SingularJacobian):
        solve_critical_point(fold, 0.0, 0.0, (0.0, 0.0))


def test_chart_fold(fold):
    ch = sm_chart(fold, 0.0, 0.0)
    assert (ch.f, ch.g, ch.g_x, ch.g_xx, ch.g_xxx, ch.g_v) == pytest.approx((0, 0, 0, -6, 0, 0),
                                                                           abs=1e-12)
    ch = sm_chart(fold, 1.0, 0.0, guess=(0.0, -2.0))
    assert ch.g == pytest.approx(-3) and ch.g_x == pytest.approx(-6)
    assert ch.conditioning == pytest.approx(1.0)
    res = fold.gradient(ch.point)
    assert abs(res[0]) < 1e-10 and abs(res[1]) < 1e-10


def _newton_g(model, x, v, guess):
    return sm_chart(model, x, v, guess=guess, degree=1).g


def test_chart_cusp_against_finite_differences(cusp):
    ch = sm_chart(cusp, 0.0, 0.0)
    assert ch.g_x == pytest.approx(0, abs=1e-14) and ch.g_xx == pytest.approx(0, abs=1e-14)
    assert ch.g_xxx == pytest.approx(-6.0)
    # brute force: third central difference of the Newton-solved g
    h = 1e-2
    g = [_newton_g(cusp, k * h, 0.0, (0.0, 0.0)) for k in (-2, -1, 1, 2)]
    fd3 = (-0.5 * g[0] + g[1] - g[2] + 0.5 * g[3]) / h ** 3
    assert fd3 == pytest.approx(ch.g_xxx, rel=1e-6)
    fd_xv = (_newton_g(cusp, h, h, (0, 0)) - _newton_g(cusp, h, -h, (0, 0))
             - _newton_g(cusp, -h, h, (0, 0)) + _newton_g(cusp, -h, -h, (0, 0))) / (4 * h * h)
    assert fd_xv == pytest.approx(ch.g_xv, rel=1e-6)


def test_chart_invalid_without_coupling():
    m = parse_hamiltonian("v + x^3 + y^2/2 + x")
    with pytest.raises(ChartInvalid):
        sm_chart(m, 0.5, 0.0, guess=(0.0, 0.0))


def test_delta_examples(fold):
    assert delta(fold, (0, 0, 0, 0)) == 0
    assert delta(fold, (1, 0, -3, 0)) == pytest.approx(-6)
    rot = parse_hamiltonian("(x^2 + y^2)/2")
    assert delta(rot, (0.3, 0.1, 2, 5)) == -1


def test_trace_fold_stays_on_v_axis(fold):
    curve = trace_singular_curve(fold, (0, 0, 0, 0), steps=20)
    assert np.max(np.abs(curve[:, :3])) < 1e-9
    assert np.all(np.diff(curve[:, 3]) > 0)
    assert max(abs(delta(fold, z)) for z in curve) < 1e-8


def test_trace_cusp_matches_grid_scan(cusp):
    curve = trace_singular_curve(cusp, (0, 0, 0, 0), steps=10, ds=0.02)
    assert max(abs(delta(cusp, z)) for z in curve) < 1e-8
    # independent oracle: on SM (y=0, u=-vx-x^3) scan v for the sign change of Delta
    for x, _, u, v in curve[1:]:
        vs = np.linspace(-0.5, 0.1, 60001)
        d = np.array([delta(cusp, (x, 0.0, -vv * x - x ** 3, vv)) for vv in vs[::100]])
        i = np.where(np.diff(np.sign(d)))[0][0]
        fine = vs[i * 100:(i + 1) * 100 + 1]
        dd = np.array([delta(cusp, (x, 0.0, -vv * x - x ** 3, vv)) for vv in fine])
        j = np.where(np.diff(np.sign(dd)))[0][0]
        assert v == pytest.approx(fine[j], abs=2e-5)
        assert u == pytest.approx(-v * x - x ** 3, abs=1e-10)


def test_trace_rejects_bad_seed(fold):
    with pytest.raises(PreconditionError):
        trace_singular_curve(fold, (1, 0, -3, 0))


def test_classify_fold(fold):
    rec = classify_singular_point(fold, (0, 0, 0, 0))
    assert rec.classification is Classification.Fold
    assert rec.margins["g_xx"] == pytest.approx(-6)
    assert rec.margins["delta_x"] == pytest.approx(-6)
    assert rec.margins["transversality"] == pytest.approx(1.0, abs=1e-10)
    assert rec.margins["rank"] == 2


def test_classify_cusp_and_sign_flip(cusp):
    from slowfast import cusp_canonical
    for a4 in (1.0, -1.0):
        rec = classify_singular_point(cusp_canonical(a4=a4), (0, 0, 0, 0))
        assert rec.classification is Classification.Cusp
        assert rec.margins["g_xxx"] == pytest.approx(-6 * a4)


def test_classify_degenerate_quintic():
    rec = classify_singular_point(QUINTIC, (0, 0, 0, 0))
    assert rec.classification is Classification.Degenerate
    assert rec.margins["g_xx"] == 0 and rec.margins["g_xxx"] == 0


def test_classify_regular(fold):
    rec = classify_singular_point(fold, (1, 0, -3, 0))
    assert rec.classification is Classification.Regular


def test_only_slow_minor_is_flagged():
    rec = classify_singular_point(parse_hamiltonian("x*u + y*v"), (0, 0, 0, 0))
    assert rec.classification is Classification.Degenerate
    assert "(u, v)" in rec.reason


def test_low_rank_is_degenerate():
    rec = classify_singular_point(parse_hamiltonian("v + x^3 + y^3"), (0, 0, 0, 0))
    assert rec.classification is Classification.Degenerate
    assert "rank" in rec.reason


def test_not_on_sm(fold):
    with pytest.raises(NotOnSM):
        classify_singular_point(fold, (0.5, 0, 0, 0))


def test_classification_independent_of_chart():
    m = parse_hamiltonian("v + u*x + v*x + x^3 + y^2/2")
    a = classify_singular_point(m, (0, 0, 0, 0), chart=CHARTS[0])
    b = classify_singular_point(m, (0, 0, 0, 0), chart=CHARTS[1])
    assert a.classification is b.classification is Classification.Fold


def test_regular_projection_is_local_diffeomorphism(fold):
    # Jacobian of (x, v) -> (g(x, v), v) by finite differences of Newton solves
    h = 1e-5
    g = [_newton_g(fold, 1 + k * h, 0.0, (0.0, -3.0)) for k in (-1, 1)]
    assert abs((g[1] - g[0]) / (2 * h)) > 1.0


def test_slow_hamiltonian_examples(fold):
    assert slow_hamiltonian(fold, -3.0, 0.4, guess=(0.9, 0)) == pytest.approx(0.4 - 2)
    h, field, pt = slow_vector_field(fold, -3.0, 0.4, guess=(0.9, 0))
    np.testing.assert_allclose(field, [1, -1], atol=1e-12)
    m = parse_hamiltonian("(x^2 + y^2)/2 + u*v")
    h, field, _ = slow_vector_field(m, 0.5, -0.7)
    assert h == pytest.approx(-0.35)
    np.testing.assert_allclose(field, [0.5, 0.7], atol=1e-14)


def test_envelope_property(fold, rng):
    m = fold.bind(q=0.3, b=0.1)
    for _ in range(5):
        u, v = rng.uniform(-3, -1), rng.uniform(-1, 1)
        x0 = np.sqrt(-u / 3)
        _, field, pt = slow_vector_field(m, u, v, guess=(x0, 0))
        d = 1e-5
        hu = (slow_hamiltonian(m, u + d, v, pt[:2]) - slow_hamiltonian(m, u - d, v, pt[:2])) / (2 * d)
        hv = (slow_hamiltonian(m, u, v + d, pt[:2]) - slow_hamiltonian(m, u, v - d, pt[:2])) / (2 * d)
        g = m.gradient(pt)
        assert hu == pytest.approx(g[2], abs=1e-6) and hv == pytest.approx(g[3], abs=1e-6)
        np.testing.assert_allclose(field, [hv, -hu], atol=1e-6)
