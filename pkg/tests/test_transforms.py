import math

import numpy as np
import pytest

from apmetric.errors import DimensionError, RadiusError
from apmetric.exprdsl import compile_expr, parse
from apmetric.funcspace import QuadratureGrid, WeightFunction
from apmetric.transforms import (OperatorFamily, check_weight_submultiplicative, conv_product, convolve,
                                 gauss_semigroup, heat_kernel, nemytskii, period_transfer_bound, tail_check)

PTS = np.linspace(-10, 10, 201)[:, None]


def test_heat_semigroup_attenuates_sine():
    G = gauss_semigroup(compile_expr("sin(t)"), 1.0)
    err = np.max(np.abs(G.raw(PTS)[:, 0] - math.exp(-1) * np.sin(PTS[:, 0])))
    assert err <= 1e-3


def test_heat_semigroup_composition():
    F = compile_expr("sin(t) + cos(sqrt(2)*t)")
    a = gauss_semigroup(gauss_semigroup(F, 0.5), 0.5).raw(PTS[::10])
    b = gauss_semigroup(F, 1.0).raw(PTS[::10])
    assert np.max(np.abs(a - b)) <= 5e-3


def test_gaussian_convolution_of_gaussian():
    # N(0, 1/2) * N(0, 1/2) = N(0, 1)
    h = compile_expr("exp(-t^2)/sqrt(pi)")
    G = convolve(h, h, radius=8)
    x = np.array([[0.0], [1.0]])
    np.testing.assert_allclose(G.raw(x)[:, 0].real, np.exp(-x[:, 0] ** 2 / 2) / math.sqrt(2 * math.pi), atol=1e-10)


def test_tail_check_rejects_heavy_kernel():
    assert not tail_check(compile_expr("1/(pi*(1+t^2))"), 10)["ok"]
    with pytest.raises(RadiusError):
        convolve(compile_expr("1/(pi*(1+t^2))"), compile_expr("sin(t)"), radius=10)


def test_transfer_constant():
    h = heat_kernel(1.0)
    assert period_transfer_bound(h, None, 12.0) == pytest.approx(1.0, abs=1e-8)
    w = WeightFunction(compile_expr("2*(1+t^2)"))
    assert period_transfer_bound(h, w, 16.0) == pytest.approx(2 * (1 + 2), abs=1e-6)  # variance 2


def test_submultiplicative_weights():
    grid = QuadratureGrid.interval(-20, 20, 401)
    nu = WeightFunction(compile_expr("1/(1+t^2)"))
    assert check_weight_submultiplicative(nu, WeightFunction(compile_expr("2*(1+t^2)")), grid) <= 1e-12
    assert check_weight_submultiplicative(nu, WeightFunction(1.0), grid) > 0
    e = WeightFunction(compile_expr("exp(t)"))
    assert check_weight_submultiplicative(e, e, grid) <= 1e-12 * math.exp(40)


def test_conv_product_with_exponential_family():
    # int_0^inf e^{-s} e^{i(t-s)} ds = e^{it} / (1 + i)
    R = OperatorFamily.diagonal([compile_expr("exp(-t)")])
    F = conv_product(R, compile_expr("exp(i*t)"), 40.0, spacing=0.005)
    x = np.array([[0.0], [2.0]])
    np.testing.assert_allclose(F.raw(x)[:, 0], np.exp(1j * x[:, 0]) / (1 + 1j), atol=1e-4)


def test_operator_family_continuity():
    R = OperatorFamily.diagonal([compile_expr("exp(-t)"), compile_expr("1/(1+t)")])
    assert R.check_continuity() < 1e-6
    with pytest.raises(DimensionError):
        conv_product(R, compile_expr("sin(t)"), 10.0)


def test_nemytskii_expression_and_callable():
    F = compile_expr("sin(t)")
    W = nemytskii(parse("y^2 + t", n=2, names=["t", "y"]), F)
    np.testing.assert_allclose(W.raw(PTS)[:, 0], np.sin(PTS[:, 0]) ** 2 + PTS[:, 0])
    G = compile_expr("t2 * 2", n=2)
    np.testing.assert_allclose(nemytskii(G, F).raw(PTS)[:, 0], 2 * np.sin(PTS[:, 0]))
