import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from apmetric.errors import SpecError
from apmetric.exprdsl import compile_expr
from apmetric.funcspace import DomainBox, ExponentFunction, QuadratureGrid, WeightFunction, translate
from apmetric.metrics import (MetricSpace, luxemburg_norm, luxemburg_values, membership_check, modular,
                              parse_metric_spec, stepanov_embedding_check, sup_distance, verify_holder_inequality)
from apmetric import corpus

LP = ["1 + t", "sin(3*t)", "exp(-t)", "t^2 - 0.5", "cos(t) + 2*sin(5*t)"]


@pytest.mark.parametrize("text", LP)
@pytest.mark.parametrize("p", [1, 2, 4])
def test_luxemburg_matches_lp_oracle(oracles, text, p):
    grid = QuadratureGrid.interval(0, 1, 10001)
    val = luxemburg_norm(compile_expr(text), ExponentFunction(p), None, grid)
    assert val == pytest.approx(oracles["lp_norms"][f"{text}|{p}"], rel=1e-6)


def test_luxemburg_infinite_exponent_is_sup():
    a = np.array([0.5, 2.0, 1.0])
    assert luxemburg_values(a, np.full(3, math.inf), np.full(3, 1 / 3)) == pytest.approx(2.0)


def test_modular_of_unit_constant():
    grid = QuadratureGrid.interval(0, 1, 1001)
    assert modular(compile_expr("1"), ExponentFunction(3), grid) == pytest.approx(1.0)


def test_weighted_sup_witness():
    nu = WeightFunction(compile_expr("1/(1 + t^2)"))
    r = sup_distance(compile_expr("t"), compile_expr("0"), nu, QuadratureGrid.interval(-5, 5, 1001))
    assert r.value == pytest.approx(0.5, abs=1e-6)
    assert abs(r.witness[0]) == pytest.approx(1.0, abs=0.02)


def test_variation_of_sine():
    # sup |sin| plus the largest variation over [t - 1, t + 1], which is 2 sin(1) around a zero
    M = MetricSpace("variation", span=1.0, spacing=0.001)
    v = M.norm(compile_expr("sin(t)"), DomainBox.interval(-10, 10))
    assert v == pytest.approx(1 + 2 * math.sin(1), abs=1e-5)


def test_holder_of_lipschitz_function():
    M = MetricSpace("holder", alpha=1.0, spacing=0.001)
    v = M.norm(compile_expr("sin(t)"), DomainBox.interval(-10, 10))
    assert v == pytest.approx(2.0, abs=1e-3)  # sup |sin| + Lipschitz constant 1


def test_membership_flags_divergent_variation():
    f = corpus.function("stojko1_sum")
    chk = membership_check(f, MetricSpace("variation"), DomainBox.interval(-50, 50))
    assert not chk["member"]
    assert membership_check(compile_expr("sin(t)"), MetricSpace("variation"))["member"]


def test_parse_metric_spec_forms():
    assert parse_metric_spec("sup").kind == "sup"
    assert parse_metric_spec("sup:nu=1/(1+t^2)").kind == "weighted_sup"
    M = parse_metric_spec("lux:p=2,nu=1,h=0.01,R=5")
    assert (M.kind, M.h, M.radius) == ("luxemburg", 0.01, 5.0)
    assert parse_metric_spec("holder:alpha=0.5").alpha == 0.5
    assert parse_metric_spec("stepanov:p=2,omega=2").omega == 2.0
    P = parse_metric_spec("prod:[sup;var]")
    assert [f.kind for f in P.factors] == ["sup", "variation"]
    with pytest.raises(SpecError):
        parse_metric_spec("bogus")
    with pytest.raises(SpecError):
        parse_metric_spec("holder:alpha=2")


def test_holder_inequality_constant_exponents():
    grid = QuadratureGrid.interval(0, 1, 2001)
    u, v = compile_expr("1 + sin(4*t)"), compile_expr("cos(2*t) - 0.3")
    m = verify_holder_inequality(u, v, ExponentFunction(4), ExponentFunction(2), ExponentFunction(4), grid)
    assert m >= 0


def test_stepanov_embedding_margin():
    r = stepanov_embedding_check(compile_expr("sin(t)"), ExponentFunction(2),
                                 WeightFunction(compile_expr("1/(1+t^2)")), DomainBox.interval(-20, 20))
    assert r["margin"] >= 0 and r["tiles"] == 40


_FUNCS = ["sin(t)", "cos(2*t) + 0.5", "t/(1 + t^2)", "sin(t)*exp(-t^2)", "0"]
_KINDS = [MetricSpace("sup"), MetricSpace("sup", weight=WeightFunction(compile_expr("1/(1+t^2)"))),
          MetricSpace("luxemburg", exponent=ExponentFunction(2), radius=10.0),
          MetricSpace("variation", radius=10.0), MetricSpace("holder", alpha=0.5, radius=10.0),
          MetricSpace("stepanov", exponent=ExponentFunction(3), radius=10.0)]
_f = st.sampled_from(_FUNCS).map(compile_expr)


@given(st.sampled_from(range(len(_KINDS))), _f, _f, _f)
def test_metric_axioms(k, f, g, h):
    M = _KINDS[k]
    dfg, dgf = M.distance(f, g), M.distance(g, f)
    assert dfg >= 0
    assert dfg == pytest.approx(dgf, rel=1e-9, abs=1e-12)
    assert M.distance(f, f) == 0
    assert dfg <= M.distance(f, h) + M.distance(h, g) + 1e-9


@given(st.floats(-3, 3))
def test_unweighted_sup_translation_invariant(tau):
    # shifting both arguments only moves the sampled window; on a periodic pair the value is unchanged
    M = MetricSpace("sup", spacing=0.001, radius=20.0)
    f, g = compile_expr("sin(t)"), compile_expr("cos(t)")
    a = M.distance(f, g)
    b = M.distance(translate(f, tau), translate(g, tau))
    assert a == pytest.approx(b, abs=1e-5)
