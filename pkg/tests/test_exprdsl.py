import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from apmetric.errors import ArityError, DomainError, ExprSyntaxError, UnknownIdentifierError
from apmetric.exprdsl import compile_expr, eval_points, eval_values, evaluate, parse, to_text


def test_basic_values():
    assert evaluate(parse("1 + 2*3"), [0.0])[0] == 7
    assert evaluate(parse("2^3^2"), [0.0])[0] == 2 ** 9  # right associative
    assert evaluate(parse("-2^2"), [0.0])[0] == -4
    assert evaluate(parse("sin(pi/2) + t"), [0.5])[0] == pytest.approx(1.5)


def test_vector_and_names():
    e = parse("[t1 + t2, t1*t2]", n=2)
    assert e.m == 2
    np.testing.assert_allclose(evaluate(e, [2.0, 3.0]), [5.0, 6.0])
    f = parse("x*y", n=2, names=["x", "y"])
    assert evaluate(f, [2.0, 4.0])[0] == 8


def test_complex_promotion():
    assert evaluate(parse("sqrt(-4)"), [0.0])[0] == pytest.approx(2j)
    assert evaluate(parse("exp(i*pi)"), [0.0])[0] == pytest.approx(-1)
    assert evaluate(parse("re(3 + 4*i) + im(3 + 4*i)"), [0.0])[0] == pytest.approx(7)


def test_piecewise_masks_branches():
    # the log branch is never evaluated at t <= 0
    vals = eval_points(parse("pw(t > 0, log(t), 0)"), np.array([[-1.0], [0.0], [math.e]]))
    np.testing.assert_allclose(vals[:, 0].real, [0.0, 0.0, 1.0])


def test_frac_and_floor():
    vals = eval_points(parse("frac(t) + floor(t)"), np.array([[-1.25], [2.5]]))
    np.testing.assert_allclose(vals[:, 0].real, [-1.25, 2.5])


def test_arcsin_domain_error():
    with pytest.raises(DomainError):
        evaluate(parse("arcsin(t)"), [2.0])


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("sin(t +")
    assert exc.value.offset == 7


@pytest.mark.parametrize("text,err", [("foo(t)", UnknownIdentifierError), ("s", UnknownIdentifierError),
                                      ("pw(t > 0, 1)", ArityError), ("(1 + 2", ExprSyntaxError)])
def test_errors(text, err):
    with pytest.raises(err):
        parse(text)


def test_boolean_outside_pw_rejected():
    with pytest.raises(ExprSyntaxError):
        parse("1 + (t > 0)")


def test_eval_values_complex_inputs():
    e = parse("u^2 + t", n=2, names=["t", "u"])
    out = eval_values(e, np.array([[1.0, 1j]]))
    assert out[0, 0] == pytest.approx(0)


def test_compile_expr_wraps():
    f = compile_expr("t^2", label="sq")
    assert f.label == "sq"
    assert f.raw(np.array([[3.0]]))[0, 0] == 9


# -- round trip -------------------------------------------------------------------
_atoms = st.one_of(st.sampled_from(["t", "pi", "e", "1", "2.5", "0.25"]),
                   st.integers(0, 9).map(str))


def _combine(children):
    bin_ = st.tuples(children, st.sampled_from(["+", "-", "*", "/", "^"]), children).map(
        lambda x: f"({x[0]} {x[1]} {x[2]})")
    call = st.tuples(st.sampled_from(["sin", "cos", "exp", "abs", "frac"]), children).map(lambda x: f"{x[0]}({x[1]})")
    neg = children.map(lambda c: f"-{c}")
    pw = st.tuples(children, children, children).map(lambda x: f"pw({x[0]} < {x[1]}, {x[1]}, {x[2]})")
    return st.one_of(bin_, call, neg, pw)


expressions = st.recursive(_atoms, _combine, max_leaves=12)


@given(expressions)
def test_print_parse_idempotent(text):
    once = to_text(parse(text))
    assert to_text(parse(once)) == once


@given(expressions, st.floats(-3, 3))
def test_printed_form_evaluates_identically(text, t):
    a = evaluate(parse(text), [t])
    b = evaluate(parse(to_text(parse(text))), [t])
    np.testing.assert_array_equal(np.isnan(a), np.isnan(b))
    np.testing.assert_allclose(a[~np.isnan(a)], b[~np.isnan(b)], rtol=0, atol=0)
