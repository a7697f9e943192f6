import math

import numpy as np
import pytest

from apmetric import corpus
from apmetric.errors import DimensionError, SpecError
from apmetric.exprdsl import compile_expr
from apmetric.funcspace import DomainBox, ParameterSet, QuadratureGrid
from apmetric.metrics import MetricSpace
from apmetric.periods import (NOT_FOUND, RELATIVELY_DENSE, Relation, bochner_subsequence, difference_period_check,
                              find_best_tau, levitan_defect, measure_period_defect, parse_relation, period_defect,
                              recurrence_search, rho_periodic_defect, scan_bohr_periods, semi_periodic_defect,
                              telescoping_residual)

SUP = MetricSpace("sup")


def test_relations():
    v = np.array([[1.0, 0.0]])
    np.testing.assert_allclose(Relation.rotation(math.pi / 2).apply(v), [[0.0, 1.0]], atol=1e-15)
    assert Relation.scale(-1).apply(np.array([[2.0]]))[0, 0] == -2
    assert parse_relation("scale:0,1").c == 1j
    assert parse_relation("fn:2*u").apply(np.array([[3.0]]))[0, 0] == 6
    assert Relation.linear(np.diag([1.0, 2.0])).power(3).operator_norm() == pytest.approx(8)
    with pytest.raises(SpecError):
        parse_relation("nope")


def test_exact_period_and_antiperiod():
    sin = compile_expr("sin(t)")
    assert period_defect(sin, None, 2 * math.pi, Relation.identity(), SUP) < 1e-12
    assert period_defect(sin, None, math.pi, Relation.scale(-1), SUP) < 1e-12
    assert period_defect(sin, None, 1.0, Relation.identity(), SUP) == pytest.approx(2 * math.sin(0.5), abs=1e-3)


def test_rotation_relation_on_circle():
    F = corpus.function("rot2d")
    d = period_defect(F, None, math.pi / 2, Relation.rotation(math.pi / 2), SUP)
    assert d < 1e-12


def test_defect_max_over_parameters():
    F = compile_expr("sin(t1 * t2)", n=2)
    params = ParameterSet([(1.0,), (2.0,)])
    # 2 pi is a period for both frequencies, pi only for frequency 2
    assert period_defect(F, params, 2 * math.pi, Relation.identity(), SUP) < 1e-12
    assert period_defect(F, params, math.pi, Relation.identity(), SUP) == pytest.approx(2.0, abs=1e-3)


def test_dimension_check():
    with pytest.raises(DimensionError):
        measure_period_defect(compile_expr("sin(t)"), None, [1.0, 2.0], Relation.identity(), SUP)


def test_sin_inclusion_length_matches_analytic_gap(oracles):
    # good taus are |tau - 2 pi k| <= 2 arcsin(eps/2); windows of diameter 2l must bridge the gaps
    gap = oracles["sin_inclusion_eps0.1_gap"]
    ladder = (1, 2, 3, 4, 5)
    rep = scan_bohr_periods(compile_expr("sin(t)"), None, 0.1, Relation.identity(), SUP, ladder=ladder)
    assert rep.verdict == RELATIVELY_DENSE
    assert rep.inclusion_length == min(l for l in ladder if 2 * l >= gap)


def test_scan_reports_not_found_when_ladder_too_short():
    rep = scan_bohr_periods(compile_expr("sin(t)"), None, 0.1, Relation.identity(), SUP, ladder=(1, 2))
    assert rep.verdict == NOT_FOUND
    assert rep.ladder_tried == [1.0, 2.0]


def test_scan_antiperiodic():
    rep = scan_bohr_periods(compile_expr("sin(t)"), None, 0.05, Relation.scale(-1), SUP, ladder=(1, 2, 4))
    assert rep.verdict == RELATIVELY_DENSE
    good = np.array([t[0] if isinstance(t, list) else t for t in rep.good_taus])
    assert np.all(np.min(np.abs(good[:, None] - math.pi * (2 * np.arange(-20, 21) + 1)[None, :]), axis=1) < 0.06)


def test_levitan_defect_on_truncated_region():
    F = corpus.function("levitan_unbounded")
    assert levitan_defect(F, 2 * math.pi, 5.0, SUP) > levitan_defect(F, 0.0, 5.0, SUP)
    assert levitan_defect(F, 0.0, 5.0, SUP) == 0


def test_find_best_tau_locates_period():
    tau, d = find_best_tau(compile_expr("sin(t)"), None, Relation.identity(), SUP, 5.0, 8.0)
    assert tau == pytest.approx(2 * math.pi, abs=0.006)
    assert d < 0.01


def test_recurrence_weighted_vs_bounded():
    box = DomainBox.interval(0.0, 50.0)
    exp_w = MetricSpace("sup", weight=corpus.get("nu_exp").weight)
    bnd_w = MetricSpace("sup", weight=corpus.get("nu_bounded").weight)
    r1 = recurrence_search(corpus.function("recurrent_exp"), None, Relation.identity(), exp_w, [10, 100], box=box)
    r2 = recurrence_search(corpus.function("recurrent_bounded"), None, Relation.identity(), bnd_w, [10, 100], box=box)
    assert r1.increasing and max(r1.defects) < 1e-2
    assert min(r2.defects) > 0.5


def test_bochner_finds_cauchy_tail():
    seq = [2 * math.pi * k + 0.5 * (k % 2) for k in range(12)]
    r = bochner_subsequence(compile_expr("sin(t)"), None, seq, SUP, tail=4, eps=0.05)
    assert r.cauchy_defect < 0.05
    assert all(i % 2 == r.indices[0] % 2 for i in r.indices)


def test_rho_periodic_and_telescoping():
    grid = QuadratureGrid.interval(-10, 10, 401)
    F = corpus.function("rot2d")
    assert rho_periodic_defect(F, math.pi, Relation.scale(-1), grid) < 1e-12
    assert telescoping_residual(F, 0.7, Relation.rotation(0.3), 5, grid) < 1e-12


def test_difference_period_bound():
    r = difference_period_check(corpus.function("two_freq"), 43.98, 87.96, Relation.identity(), SUP)
    assert r["holds"] and r["c"] == 1.0


def test_semi_periodic_defect_of_periodic_function_vanishes():
    assert semi_periodic_defect(compile_expr("sin(t)"), 2 * math.pi, SUP, 4) < 1e-12
