import math

import numpy as np
import pytest
from _oracles import all_multi_indices, richardson_partial
from hypothesis import given, settings
from hypothesis import strategies as st

from slowfast.errors import ParseError, UnboundParameter
from slowfast.hamiltonian import (Bin, Call, Neg, Num, Pow, Sym, eval_jet, format_model_file,
                                  parse_expression, parse_hamiltonian, parse_model_file,
                                  to_source)
from slowfast.jets import extract_partial


def test_evaluate_example():
    m = parse_hamiltonian("v + u*x + x^3 + y^2/2")
    assert m(1, 2, 3, 4) == 10


def test_cusp_text_matches_builtin(cusp, rng):
    m = parse_hamiltonian("u + u*x + v*x^2/2 + x^4/4 + y^2/2")
    for p in rng.uniform(-1, 1, (20, 4)):
        assert m(*p) == pytest.approx(cusp(*p), rel=1e-14, abs=1e-14)


def test_syntax_error_position():
    with pytest.raises(ParseError) as info:
        parse_hamiltonian("x +* y")
    assert info.value.position == 3
    assert "offset 3" in str(info.value)


@pytest.mark.parametrize("text", ["", "x +", "(x", "x^1.5", "foo(x)", "x y"])
def test_malformed_inputs(text):
    with pytest.raises(ParseError):
        parse_expression(text)


def test_precedence_and_associativity():
    m = parse_hamiltonian("-x^2 + 8/2/2 - 1 - 1")
    assert m(3, 0, 0, 0) == -9 + 2 - 2
    # same-precedence operators, ^ included, associate to the left
    assert parse_hamiltonian("2^3^2")(0, 0, 0, 0) == (2 ** 3) ** 2


def test_unbound_parameter_reported_at_evaluation():
    m = parse_hamiltonian("a*x + b")
    assert m.unbound == {"a", "b"}
    with pytest.raises(UnboundParameter) as info:
        m(1, 0, 0, 0)
    assert info.value.names == ["a", "b"]
    assert m.bind(a=2, b=1)(3, 0, 0, 0) == 7


def test_eval_jet_examples(fold):
    j = eval_jet(fold, (0, 0, 0, 0), active=("x", "y"), degree=2)
    assert extract_partial(j, (1, 0)) == 0.0
    assert extract_partial(j, (0, 2)) == 1.0
    assert extract_partial(j, (2, 0)) == 0.0
    const = eval_jet(parse_hamiltonian("5"), (1, 2, 3, 4), degree=3)
    assert const.value == 5 and np.all(const.coeffs[1:] == 0)
    xy = eval_jet(parse_hamiltonian("x*y"), (2, 3, 0, 0), active=("x",), degree=1)
    np.testing.assert_allclose(xy.coeffs, [6, 3])


def test_canonical_origin_is_fast_equilibrium(fold, cusp):
    for m in (fold, cusp):
        g = m.gradient((0, 0, 0, 0))
        assert g[0] == 0 and g[1] == 0


def test_grad_hess_matches_jet(fold, rng):
    m = fold.bind(q=0.7, b=0.2)
    for p in rng.uniform(-1, 1, (10, 4)):
        g, hes = m.grad_hess(p)
        j = m.jet(p, degree=2)
        np.testing.assert_allclose(g, j.gradient(), atol=1e-14)
        np.testing.assert_allclose(hes, j.hessian(), atol=1e-14)


def test_jet_constant_term_equals_scalar(rng):
    m = parse_hamiltonian("exp(x*u) + sin(y)*cos(v) + sqrt(2 + x^2) / (1 + y^2)")
    for p in rng.uniform(-1, 1, (20, 4)):
        assert m.jet(p, degree=3).value == m(*p)


def test_derivatives_against_finite_differences(rng):
    m = parse_hamiltonian("exp(x*u) + sin(y)*cos(v) + x^3*y^2/(2 + v^2)")
    fn = m._fn
    for p in rng.uniform(-0.5, 0.5, (3, 4)):
        j = m.jet(p, degree=4)
        for mi in all_multi_indices(3):
            fd = richardson_partial(fn, p, mi, h=0.02)
            assert extract_partial(j, mi) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_model_file_round_trip(tmp_path):
    m = parse_hamiltonian("v + u*x + c*x^3 + H1*y^2", {"c": 1.5, "H1": 0.25})
    path = tmp_path / "model.txt"
    path.write_text(format_model_file(m))
    m2 = parse_model_file(path.read_text())
    assert m2.params == m.params
    assert m2(0.3, 0.2, -0.1, 0.4) == m(0.3, 0.2, -0.1, 0.4)


def test_model_file_rejects_bad_param_line():
    with pytest.raises(ParseError):
        parse_model_file("param a = nope\nx")


# random expression trees for the print/parse round trip
leaves = st.one_of(st.sampled_from([Sym(s) for s in "xyuv"]),
                   st.floats(0.1, 3.0).map(lambda f: Num(round(f, 3))))


def _extend(children):
    return st.one_of(
        st.builds(Bin, st.sampled_from("+-*"), children, children),
        st.builds(Bin, st.just("/"), children, st.floats(1.0, 3.0).map(lambda f: Num(round(f, 2)))),
        st.builds(Neg, children),
        st.builds(Pow, children, st.integers(0, 3)),
        st.builds(Call, st.sampled_from(["sin", "cos", "exp"]), children),
    )


trees = st.recursive(leaves, _extend, max_leaves=8)


@given(trees)
@settings(max_examples=100, deadline=None)
def test_print_parse_round_trip(tree):
    text = to_source(tree)
    m1 = parse_hamiltonian(text)
    m2 = parse_hamiltonian(to_source(parse_expression(text)))
    rng = np.random.default_rng(0)
    for p in rng.uniform(-1, 1, (5, 4)):
        a, b = m1(*p), m2(*p)
        if math.isfinite(a):
            assert b == pytest.approx(a, rel=1e-14, abs=1e-300)
