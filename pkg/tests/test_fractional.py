import math

import numpy as np
import pytest
from scipy import integrate, special

from apmetric.errors import ContractionError, RangeError
from apmetric.exprdsl import parse
from apmetric.fractional import (DiagonalOperator, FractionalKernel, LambdaOperator, SolverGrid, check_condition_P,
                                 history_length, kernel_mass, kernel_rgamma, lambda_map, mittag_leffler,
                                 solution_transfer, solve_fixed_point, wright, wright_cutoff)

GAMMAS = (0.2, 0.35, 0.5, 0.65, 0.8)
MUS = (-0.5, -1.0, -2.0)
TS = np.logspace(-3, 1, 20)


def test_wright_values(oracles):
    assert wright(0.5, 0.0) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-10)
    assert wright(0.5, 1.0) == pytest.approx(oracles["wright_half_at_1"], abs=1e-8)
    for z in (3.0, 8.0, 15.0):
        assert wright(0.5, z) == pytest.approx(math.exp(-z * z / 4) / math.sqrt(math.pi), abs=1e-14)


def test_wright_moment():
    total = integrate.quad(lambda s: wright(0.3, s), 0, wright_cutoff(0.3), limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_wright_nonnegative_and_domain():
    for g in GAMMAS:
        vals = [wright(g, z) for z in np.linspace(0, wright_cutoff(g), 25)]
        assert min(vals) >= -1e-15
    with pytest.raises(RangeError):
        wright(0.5, -1.0)
    with pytest.raises(RangeError):
        wright(1.0, 1.0)


def test_mittag_leffler_values(oracles):
    assert mittag_leffler(1, 1, -1) == pytest.approx(math.exp(-1), abs=1e-10)
    assert mittag_leffler(0.5, 1, 0) == 1
    assert mittag_leffler(0.4, 0.4, 0) == pytest.approx(1 / math.gamma(0.4), abs=1e-10)
    # E_{1/2,1/2}(-6) via both the series window and the integral representation
    assert mittag_leffler(0.5, 0.5, -6.0) == pytest.approx(oracles["ml_half_half_at_minus6"], rel=1e-10)
    with pytest.raises(RangeError):
        mittag_leffler(0.5, 1, 1.0)


def test_mittag_leffler_series_and_integral_agree_at_switch():
    below = mittag_leffler(0.6, 0.6, -5.0)
    above = mittag_leffler(0.6, 0.6, -5.0 - 1e-12)
    assert below == pytest.approx(above, rel=1e-9)


def test_kernel_against_laplace_inversion(oracles):
    for key, ref in oracles["kernel_talbot"].items():
        g, mu, t = (float(v) for v in key.split("|"))
        for route in ("wright", "ml"):
            assert kernel_rgamma(g, mu, t, route) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_dual_route_agreement(gamma):
    for mu in MUS:
        a = kernel_rgamma(gamma, mu, TS, "wright")
        b = kernel_rgamma(gamma, mu, TS, "ml")
        assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-5
        assert np.all(a > 0)


def test_kernel_mass_and_asymptote():
    assert kernel_mass(0.6, -2.0) == pytest.approx(0.5, abs=1e-4)
    t = 1e-6
    assert kernel_rgamma(0.5, -1.0, t) * t ** 0.5 == pytest.approx(1 / math.sqrt(math.pi), abs=1e-3)


def test_tail_mass_decreases():
    k = FractionalKernel(0.9, -4.0)
    assert k.total_mass == 0.25
    assert k.tail_mass(10) > k.tail_mass(100) > 0
    assert history_length(0.9, -4.0) == 1000.0


def test_condition_p():
    assert check_condition_P(DiagonalOperator((-1.0,)), 0.4, 4, 1) >= 0
    assert check_condition_P(DiagonalOperator((1.0,)), 0.4, 4, 1) == -math.inf
    assert check_condition_P(DiagonalOperator((-10.0, -20.0)), 0.4, 4, 1) >= 0


OP = DiagonalOperator((-4.0,))
GRID = SolverGrid(0.0, 3200.0, 0.05)


@pytest.fixture(scope="module")
def lam_op():
    return LambdaOperator(0.9, OP, GRID)


def test_history_tail_check_rejects_heavy_tail():
    with pytest.raises(RangeError):
        LambdaOperator(0.3, DiagonalOperator((-1.0,)), SolverGrid(0.0, 4000.0, 0.5))


def test_lambda_map_of_constant(lam_op):
    k = 0.7
    f = parse(f"{4 * k}", n=2, names=["t", "u"])
    out = lambda_map(np.zeros(GRID.t.size), f, 0.9, OP, GRID, operator=lam_op)
    pts = np.linspace(out.domain.lower[0], 3200, 50)[:, None]
    assert np.max(np.abs(out.raw(pts) - k)) <= 1e-3


def test_lambda_map_of_zero(lam_op):
    out = lambda_map(np.zeros(GRID.t.size), parse("0", n=2, names=["t", "u"]), 0.9, OP, GRID, operator=lam_op)
    assert np.max(np.abs(out.raw(np.array([[1500.0], [3100.0]])))) == 0


def test_lambda_map_of_exponential(lam_op):
    # the Laplace transform of r is 1 / (s^gamma - mu), so e^{is} maps to e^{it} / (i^gamma - mu)
    out = lambda_map(np.zeros(GRID.t.size), parse("exp(i*t)", n=2, names=["t", "u"]), 0.9, OP, GRID,
                     operator=lam_op)
    t = GRID.t[GRID.t >= 3000.0]
    vals = out.raw(t[:, None])[:, 0]
    assert np.max(np.abs(vals - np.exp(1j * t) / (1j ** 0.9 + 4))) <= 1e-4


def test_affine_forcing_converges_in_one_step():
    f = parse("cos(t)", n=2, names=["t", "u"])
    res = solve_fixed_point(f, 0.0, 0.9, OP, GRID, tol=1e-12)
    assert len(res.history) == 2 and res.history[1] == 0.0


@pytest.fixture(scope="module")
def nonlinear():
    f = parse("0.5*sin(u) + cos(t) + cos(sqrt(2)*t)", n=2, names=["t", "u"])
    return f, solve_fixed_point(f, 0.5, 0.9, OP, GRID, tol=1e-9)


def test_contraction_certificate(nonlinear):
    _, res = nonlinear
    assert res.q == pytest.approx(0.125)
    assert max(res.ratios[1:]) <= res.q + 0.05
    assert res.residual <= 2e-9


def test_initialisation_independent(nonlinear):
    f, res = nonlinear
    other = solve_fixed_point(f, 0.5, 0.9, OP, GRID, tol=1e-9, u0=1.0)
    keep = res.times >= res.report_from
    assert np.max(np.abs(other.values[keep] - res.values[keep])) <= 1e-8


def test_solution_transfer(nonlinear):
    _, res = nonlinear
    for tau in (6.3, 44.0, 87.95):
        r = solution_transfer(res, tau)
        assert r["holds"], r


def test_contraction_violations():
    f = parse("2*sin(u)", n=2, names=["t", "u"])
    with pytest.raises(ContractionError):
        solve_fixed_point(f, 8.0, 0.9, OP, GRID)  # q = 2
    with pytest.raises(ContractionError):
        solve_fixed_point(f, 0.5, 0.9, OP, GRID)  # claimed constant too small
