import math

import numpy as np
import pytest

from apmetric import corpus
from apmetric.errors import SpecError
from apmetric.exprdsl import compile_expr
from apmetric.fourier import bohr_coefficient, mean_value, spectrum_scan, strong_ap_defect, trig_poly
from apmetric.metrics import MetricSpace


def test_mean_of_constant_and_shift():
    r = mean_value(compile_expr("5"), shift=[3.0])
    assert r.value[0] == pytest.approx(5)
    assert r.shift_discrepancy == pytest.approx(0, abs=1e-12)


def test_mean_matches_closed_form(oracles):
    r = mean_value(compile_expr("cos(sqrt(2)*pi*t)"), (25, 50, 100), density=64)
    assert r.value[0].real == pytest.approx(oracles["mean_cos_sqrt2pi_T100"], abs=1e-6)


def test_coefficients():
    F = compile_expr("3*exp(2*i*t) + exp(-i*t)")
    assert bohr_coefficient(F, 2).value[0] == pytest.approx(3, abs=0.01)
    # the other carrier leaks 3 sin(3T) / (3T) at T = 100, up to midpoint-rule error
    assert bohr_coefficient(F, -1).value[0] == pytest.approx(1 + math.sin(300) / 100, abs=2e-5)
    assert abs(bohr_coefficient(F, 5).value[0]) < 0.011


def test_ladder_validation():
    with pytest.raises(SpecError):
        mean_value(compile_expr("1"), (50, 25))


def test_spectrum_of_constant():
    est = spectrum_scan(compile_expr("5"))
    assert len(est.hits) == 1 and est.hits[0].lam[0] == pytest.approx(0, abs=0.01)


def test_two_freq_spectrum_and_trig_poly():
    F = corpus.function("two_freq")
    est = spectrum_scan(F)
    lams = sorted(h.lam[0] for h in est.hits)
    np.testing.assert_allclose(lams, [-math.sqrt(2), -1, 1, math.sqrt(2)], atol=0.02)
    assert all(abs(abs(h.coefficient[0]) - 0.5) < 0.01 for h in est.hits)
    M = MetricSpace("sup")
    assert strong_ap_defect(F, M, 4, spectrum=est) < 0.05
    assert strong_ap_defect(F, M, 2, spectrum=est) > 0.5
    assert trig_poly(est).m == 1
    assert est.csv_header() == ["lambda1", "component", "re", "im", "magnitude"]
