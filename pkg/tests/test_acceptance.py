"""One test per acceptance criterion; each prints a PASS/FAIL line with its measured margin."""

import math

import numpy as np
import pytest

from apmetric import corpus
from apmetric.exprdsl import compile_expr, parse
from apmetric.fourier import bohr_coefficient, mean_value, spectrum_scan
from apmetric.fractional import (DiagonalOperator, SolverGrid, kernel_mass, kernel_rgamma, solution_transfer,
                                 solve_fixed_point, wright)
from apmetric.funcspace import ExponentFunction, QuadratureGrid
from apmetric.metrics import MetricSpace, luxemburg_norm, parse_metric_spec
from apmetric.periods import NOT_FOUND, RELATIVELY_DENSE, Relation, scan_bohr_periods
from apmetric.transforms import gauss_semigroup
from apmetric.verify import peetre_weight, run_suite, transfer_check, transfer_kernels

ID = Relation.identity()
LONG_LADDER = [1000, 2500, 5000, 10000]


def scan(name, spec, eps, ladder):
    return scan_bohr_periods(corpus.function(name), None, eps, ID, parse_metric_spec(spec), ladder=ladder)


def taus_of(report):
    return [float(t if np.isscalar(t) else t[0]) for t in report.good_taus]


def min_margin(rows):
    return min(r.margin for r in rows)


def test_criterion_01_luxemburg_agreement(oracles, criterion):
    grid = QuadratureGrid.interval(0, 1, 10001)
    worst = 0.0
    for key, ref in oracles["lp_norms"].items():
        text, p = key.split("|")
        val = luxemburg_norm(compile_expr(text), ExponentFunction(float(p)), None, grid)
        worst = max(worst, abs(val - ref) / ref)
    criterion(1, worst <= 1e-6, f"Luxemburg vs closed-form L^p, 15 cases, max rel err {worst:.2e} (tol 1e-6)")


def test_criterion_02_holder(criterion):
    m = min_margin(run_suite("holder"))
    criterion(2, m >= -1e-8, f"Hölder inequality over 100 seeded pairs, min margin {m:.3e} (>= -1e-8)")


def test_criterion_03_embedding(criterion):
    rows = run_suite("embedding")
    ok = all(r.passed for r in rows)
    criterion(3, ok, f"embedding constant 2(1+m) over 50 seeded trials, min margin {min_margin(rows):.3e}")


def test_criterion_04_telescoping(criterion):
    rows = run_suite("telescoping")
    res = max(r.detail["max_residual"] for r in rows)
    criterion(4, res <= 1e-12, f"telescoping identity over 20 random cases, max residual {res:.2e} (<= 1e-12)")


def test_criterion_05_example_separations(criterion):
    s1_sup = scan("stojko1_sum", "sup", 0.1, [10, 30, 100, 300, 1000])
    s1_var = scan("stojko1_sum", "var", 0.05, [100, 1000, 10000])
    s2_var = scan("stojko2_sum", "var", 0.1, LONG_LADDER)
    s2_hol = scan("stojko2_sum", "holder:alpha=1", 0.1, LONG_LADDER)
    ok = (s1_sup.verdict == RELATIVELY_DENSE and s1_var.verdict == NOT_FOUND
          and s2_var.verdict == RELATIVELY_DENSE and s2_hol.verdict == NOT_FOUND)
    criterion(5, ok, f"stojko1_sum sup {s1_sup.verdict} (l={s1_sup.inclusion_length}), var {s1_var.verdict}; "
                     f"stojko2_sum var {s2_var.verdict} (l={s2_var.inclusion_length}), holder-1 {s2_hol.verdict}")


def test_criterion_06_levitan_unbounded(criterion):
    rep = scan("levitan_unbounded", "sup:nu=1/(1+t^2)", 0.05, LONG_LADDER)
    F = corpus.function("levitan_unbounded")
    peaks = [float(F.raw(np.arange(-T, T + 1e-9, 0.01)[:, None]).max()) for T in (50, 5000)]
    ratio = peaks[1] / peaks[0]
    ok = rep.verdict == RELATIVELY_DENSE and ratio >= 2
    criterion(6, ok, f"weighted scan {rep.verdict} (l={rep.inclusion_length}), "
                     f"sup growth T=50 -> 5000 ratio {ratio:.1f} (>= 2)")


def test_criterion_07_convolution_transfer(criterion):
    F = corpus.function("two_freq")
    rep = scan_bohr_periods(F, None, 0.1, ID, MetricSpace("sup"), ladder=[10, 30, 100, 300, 1000])
    taus = taus_of(rep)
    nu = corpus.get("nu_quad").weight
    w = peetre_weight()
    margins = [transfer_check(h, radius, F, tau, nu_, w_)["margin"]
               for h, radius in transfer_kernels() for nu_, w_ in ((None, None), (nu, w)) for tau in taus]
    m = min(margins)
    criterion(7, m >= 0, f"{len(taus)} scanned periods x 3 kernels x 2 weights, min margin {m:.3e} (>= 0)")


def test_criterion_08_heat_semigroup(criterion):
    pts = np.linspace(-10, 10, 201)[:, None]
    att = np.max(np.abs(gauss_semigroup(compile_expr("sin(t)"), 1.0).raw(pts)[:, 0] - math.exp(-1) * np.sin(pts[:, 0])))
    F = compile_expr("sin(t) + cos(sqrt(2)*t)")
    comp = np.max(np.abs(gauss_semigroup(gauss_semigroup(F, 0.5), 0.5).raw(pts) - gauss_semigroup(F, 1.0).raw(pts)))
    criterion(8, att <= 1e-3 and comp <= 5e-3,
              f"heat attenuation err {att:.2e} (<= 1e-3), composition err {comp:.2e} (<= 5e-3)")


def test_criterion_09_fractional_kernel(criterion):
    ts = np.logspace(-3, 1, 20)
    rel = 0.0
    for g in (0.2, 0.35, 0.5, 0.65, 0.8):
        for mu in (-0.5, -1.0, -2.0):
            a, b = kernel_rgamma(g, mu, ts, "wright"), kernel_rgamma(g, mu, ts, "ml")
            rel = max(rel, float(np.max(np.abs(a - b) / np.abs(b))))
    mass = abs(kernel_mass(0.6, -2.0) - 0.5)
    phi = max(abs(wright(0.5, z) - math.exp(-z * z / 4) / math.sqrt(math.pi)) for z in np.linspace(0, 10, 41))
    ok = rel <= 1e-5 and mass <= 1e-4 and phi <= 1e-8
    criterion(9, ok, f"route agreement {rel:.2e} (<= 1e-5), mass err {mass:.2e} (<= 1e-4), "
                     f"Phi_1/2 err {phi:.2e} (<= 1e-8)")


def test_criterion_10_contraction_solver(criterion):
    tol = 1e-9
    f = parse("0.5*sin(u) + cos(t) + cos(sqrt(2)*t)", n=2, names=["t", "u"])
    res = solve_fixed_point(f, 0.5, 0.9, DiagonalOperator((-4.0,)), SolverGrid(0.0, 3600.0, 0.05), tol=tol)
    ratio = max(res.ratios[1:])
    forcing = scan_bohr_periods(compile_expr("cos(t) + cos(sqrt(2)*t)"), None, 0.1, ID, MetricSpace("sup"),
                                ladder=[10, 30, 100, 300, 1000])
    h = 0.05
    taus = sorted({round(t / h) * h for t in taus_of(forcing) if 1 < abs(t) <= 200})
    transfers = [solution_transfer(res, tau) for tau in taus]
    ok = (res.q < 1 and ratio <= res.q + 0.05 and res.residual <= 2 * tol and len(taus) > 0
          and all(r["holds"] for r in transfers))
    slack = min(r["bound"] - r["solution_defect"] for r in transfers) if transfers else math.nan
    criterion(10, ok, f"q={res.q:.3f}, max ratio {ratio:.3f} (<= q+0.05), residual {res.residual:.1e} "
                      f"(<= {2 * tol:.0e}), transfer at {len(taus)} periods, min slack {slack:.2e}")


def test_criterion_11_stepanov_embedding(criterion):
    m = min_margin(run_suite("stepanov-embed"))
    criterion(11, m >= -1e-8, f"weighted L^p vs S * Stepanov, 5 entries x 3 exponents, min margin {m:.3e}")


def test_criterion_12_mean_and_spectrum(criterion):
    mean = abs(mean_value(compile_expr("sin(sqrt(2)*pi*t)"), (25, 50, 100)).value[0])
    coeff = bohr_coefficient(compile_expr("3*exp(2*i*t) + exp(-i*t)"), 2).value[0]
    hits = sorted(h.lam[0] for h in spectrum_scan(corpus.function("two_freq")).hits)
    expected = [-math.sqrt(2), -1, 1, math.sqrt(2)]
    spec_ok = len(hits) == 4 and all(abs(a - b) <= 0.02 for a, b in zip(hits, expected))
    ok = mean <= 0.01 and abs(coeff - 3) <= 0.01 and spec_ok
    criterion(12, ok, f"|M_100| {mean:.2e} (<= 0.01), coefficient err {abs(coeff - 3):.2e} (<= 0.01), "
                      f"spectrum hits {[round(x, 3) for x in hits]}")
