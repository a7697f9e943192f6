"""Built-in verification suites: seeded numerical checks of the inequalities and
invariance results the library is built on.

Each suite returns a list of ``Check`` rows; a suite passes when every row
does.  Margins are "bound minus measured value", so nonnegative is good.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import corpus
from .funcspace import DomainBox, EvalFunction, ExponentFunction, QuadratureGrid, WeightFunction
from .metrics import (MetricSpace, embedding_constant_check, stepanov_embedding_check,
                      verify_holder_inequality)

HOLDER = "variable-exponent Hölder inequality |uv|_q <= 2 |u|_p |v|_r"
EMBEDDING = "embedding L^p into L^q on finite measure with constant at most 2 (1 + |Omega|)"
LEVITAN = "weighted Bohr almost periodicity with a weight bounded below on compacts implies the Levitan property"
DIFFERENCE = "differences of two eps-periods are periods up to the weight ratio constant"
TELESCOPING = "telescoping identity F(t + l tau) - T^l F(t) as a sum of one-step defects"
TRANSFER = "convolution with h multiplies weighted period defects by at most int |h| w"
STEPANOV = "weighted L^p norm bounded by the sum over tiles of sup nu times the Stepanov norm"
CONTRACTION = "the mild-solution map is a contraction when L int w |R| < 1"
WEIGHT_EQUIV = "1/(t^2+1) and 1/(t^4+1) give the same verdicts although not comparable"


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    margin: float
    detail: dict
    citation: str

    def to_dict(self) -> dict:
        return {"suite": self.suite, "name": self.name, "passed": self.passed, "margin": self.margin,
                "detail": self.detail, "citation": self.citation}


def _fn(f: Callable, label: str) -> EvalFunction:
    return EvalFunction(lambda p: f(p[:, 0])[:, None], 1, 1, label=label)


def _smooth(rng) -> EvalFunction:
    a, b, c, d = rng.uniform(-1, 1), rng.uniform(0.2, 2), rng.uniform(0.5, 8), rng.uniform(0, 2 * math.pi)
    return _fn(lambda t: a + b * np.sin(c * t + d), f"{a:.3f}+{b:.3f}sin({c:.3f}t+{d:.3f})")


def _exponent(rng, lo: float = 1.0) -> tuple[ExponentFunction, Callable]:
    base, amp, freq = rng.uniform(lo, lo + 3), rng.uniform(0, 1), rng.uniform(0.5, 6)
    f = lambda t: base + amp * (1 + np.sin(freq * t)) / 2
    return ExponentFunction(_fn(f, f"{base:.3f}+{amp:.3f}(1+sin({freq:.3f}t))/2")), f


def suite_holder(trials: int = 100, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    grid = QuadratureGrid.interval(0.0, 1.0, 2001)
    margins = []
    for _ in range(trials):
        u, v = _smooth(rng), _smooth(rng)
        p, pf = _exponent(rng, 2.0)  # p, r >= 2 keeps q >= 1
        r, rf = _exponent(rng, 2.0)
        q = ExponentFunction(_fn(lambda t, pf=pf, rf=rf: 1.0 / (1.0 / pf(t) + 1.0 / rf(t)), "q"))
        margins.append(verify_holder_inequality(u, v, p, q, r, grid))
    m = float(min(margins))
    return [Check("holder", f"{trials} seeded pairs on [0, 1]", m >= -1e-8, m,
                  {"trials": trials, "seed": seed, "box": grid.box.to_list()}, HOLDER)]


def suite_embedding(trials: int = 50, seed: int = 1) -> list[Check]:
    rng = np.random.default_rng(seed)
    margins = []
    for _ in range(trials):
        length = rng.uniform(0.2, 5)
        grid = QuadratureGrid.interval(0.0, length, 2001)
        f = _smooth(rng)
        q, qf = _exponent(rng)
        extra = rng.uniform(0, 2)
        p = ExponentFunction(_fn(lambda t, qf=qf, extra=extra: qf(t) + extra, "p"))
        margins.append(embedding_constant_check(f, p, q, grid))
    m = float(min(margins))
    return [Check("embedding", f"{trials} seeded trials, q <= p", m >= -1e-8, m,
                  {"trials": trials, "seed": seed}, EMBEDDING)]


def suite_levitan() -> list[Check]:
    F = corpus.function("levitan_unbounded")
    nu = corpus.get("nu_quad").weight
    M = MetricSpace("sup", weight=nu)
    from .periods import Relation, find_best_tau
    tau, d_nu = find_best_tau(F, None, Relation.identity(), M, 2500.0, 2700.0)
    plan = M.plan()
    pts = plan.points
    delta = np.abs(F.raw(pts + tau) - F.raw(pts))[:, 0]
    rows = []
    for N in (5.0, 10.0, 20.0):
        inside = np.abs(pts[:, 0]) <= N + 1e-12
        levitan = float(delta[inside].max())
        bound = d_nu / float(nu.values(pts[inside]).min())
        rows.append(Check("sade", f"tau={tau:.2f}, N={N:g}", levitan <= bound + 1e-12, bound - levitan,
                          {"tau": tau, "weighted_defect": d_nu, "levitan_defect": levitan, "N": N,
                           "box": plan.box.to_list()}, LEVITAN))
    return rows


def suite_difference() -> list[Check]:
    from .periods import Relation, difference_period_check
    rows = []
    cases = [("two_freq", MetricSpace("sup")), ("two_freq", MetricSpace("sup", weight=corpus.get("nu_quad").weight)),
             ("levitan_unbounded", MetricSpace("sup", weight=corpus.get("nu_quad").weight))]
    pairs = [(43.98, 87.96), (2563.54, 3625.39), (-6.28, 12.57)]
    for name, M in cases:
        for t1, t2 in pairs:
            r = difference_period_check(corpus.function(name), t1, t2, Relation.identity(), M)
            rows.append(Check("prcko", f"{name} {M.kind} ({t1}, {t2})", r["holds"],
                              r["bound"] - r["difference_defect"], r, DIFFERENCE))
    return rows


def suite_telescoping(trials: int = 20, seed: int = 2) -> list[Check]:
    from .periods import Relation, telescoping_residual
    rng = np.random.default_rng(seed)
    grid = np.linspace(-20, 20, 801)
    worst = 0.0
    for k in range(trials):
        if k % 2 == 0:
            F, T = corpus.function("two_freq"), Relation.scale(complex(rng.uniform(-1.5, 1.5), rng.uniform(-1, 1)))
        else:
            F, T = corpus.function("rot2d"), Relation.rotation(rng.uniform(0, 2 * math.pi))
        tau, l = rng.uniform(-10, 10), int(rng.integers(1, 7))
        worst = max(worst, telescoping_residual(F, tau, T, l, grid))
    return [Check("telescoping", f"{trials} random (F, T, tau, l)", worst <= 1e-12, 1e-12 - worst,
                  {"max_residual": worst, "seed": seed}, TELESCOPING)]


def transfer_kernels() -> list[tuple[EvalFunction, float]]:
    """Gaussian, Laplace and triangle kernels with their truncation radii."""
    gauss = _fn(lambda s: np.exp(-s * s) / math.sqrt(math.pi), "gauss")
    laplace = _fn(lambda s: 0.5 * np.exp(-np.abs(s)), "laplace")
    tri = _fn(lambda s: np.maximum(0.0, 1 - np.abs(s)), "triangle")
    return [(gauss, 6.0), (laplace, 40.0), (tri, 1.0)]


def peetre_weight() -> WeightFunction:
    """Companion weight w(y) = 2(1 + y^2) of nu = 1/(1+t^2)."""
    return WeightFunction(_fn(lambda y: 2 * (1 + y * y), "2(1+y^2)"))


def transfer_check(h: EvalFunction, radius: float, F: EvalFunction, tau: float, nu: WeightFunction | None,
                   w: WeightFunction | None, spacing: float = 0.025, R: float = 50.0) -> dict:
    """Weighted defect of h * F at tau against C times that of F (C = int |h| w).

    The kernel nodes share the metric lattice, so the discrete inequality is exact.
    """
    from .transforms import convolve, period_transfer_bound
    from .periods import Relation, period_defect
    M = MetricSpace("sup", weight=nu, spacing=spacing, radius=R)
    big = DomainBox.cube(R + radius + spacing, 1)
    hF = convolve(h, F, radius=radius, spacing=spacing)
    C = period_transfer_bound(h, w, radius, spacing)
    lhs = period_defect(hF, None, tau, Relation.identity(), M)
    rhs = period_defect(F, None, tau, Relation.identity(), M, big)
    return {"tau": tau, "kernel": h.label, "nu": None if nu is None else nu.label, "C": C,
            "conv_defect": lhs, "defect": rhs, "margin": C * rhs + 1e-8 - lhs, "box": M.default_box().to_list(),
            "defect_box": big.to_list()}


def suite_transfer(taus=(6.28, 43.98, 87.96)) -> list[Check]:
    from .transforms import check_weight_submultiplicative
    F = corpus.function("two_freq")
    nu_quad = corpus.get("nu_quad").weight
    peetre = peetre_weight()
    sub = check_weight_submultiplicative(nu_quad, peetre, QuadratureGrid.interval(-50, 50, 1001))
    rows = [Check("transfer", "nu(x+y) <= nu(x) w(y) for 1/(1+t^2)", sub <= 1e-12, -sub, {"max_excess": sub},
                  TRANSFER)]
    for h, radius in transfer_kernels():
        for nu, w in ((None, None), (nu_quad, peetre)):
            for tau in taus:
                r = transfer_check(h, radius, F, tau, nu, w)
                rows.append(Check("transfer", f"{h.label}, nu={r['nu']}, tau={tau}", r["margin"] >= 0,
                                  r["margin"], r, TRANSFER))
    return rows


STEPANOV_ENTRIES = ("two_freq", "sin", "const", "stojko1_sum", "sin_small_perturbed")


def suite_stepanov(entries=STEPANOV_ENTRIES) -> list[Check]:
    nu = corpus.get("nu_quad").weight
    box = DomainBox.interval(-50.0, 50.0)
    rows = []
    for name in entries:
        for p in (1.0, 2.0, 4.0):
            r = stepanov_embedding_check(corpus.function(name), ExponentFunction(p), nu, box)
            rows.append(Check("stepanov-embed", f"{name}, p={p:g}", r["margin"] >= -1e-8, r["margin"], r, STEPANOV))
    return rows


def suite_contraction() -> list[Check]:
    from .exprdsl import parse
    from .fractional import DiagonalOperator, SolverGrid, solve_fixed_point
    f = parse("0.5*sin(u) + cos(t) + cos(sqrt(2)*t)", n=2, names=["t", "u"])
    tol = 1e-9
    res = solve_fixed_point(f, 0.5, 0.9, DiagonalOperator((-4.0,)), SolverGrid(0.0, 3200.0, 0.1), tol=tol)
    late = res.ratios[1:]
    worst = max(late) if late else 0.0
    detail = res.to_dict()
    return [Check("contraction", "ratios <= q + 0.05 from iteration 2", worst <= res.q + 0.05,
                  res.q + 0.05 - worst, detail, CONTRACTION),
            Check("contraction", "residual <= 2 tol", res.residual <= 2 * tol, 2 * tol - res.residual,
                  detail, CONTRACTION)]


def suite_weight_equiv() -> list[Check]:
    from .periods import Relation, scan_bohr_periods
    quad, quart = corpus.get("nu_quad").weight, corpus.get("nu_quart").weight
    rows = []
    mins = []
    for R in (10.0, 50.0):
        pts = np.linspace(-R, R, 4001)[:, None]
        mins.append(float(np.min(quart.values(pts) / quad.values(pts))))
    rows.append(Check("weight-equiv", "nu_quart / nu_quad not bounded below", mins[1] < mins[0] and mins[1] < 1e-3,
                      1e-3 - mins[1], {"min_ratio_R10": mins[0], "min_ratio_R50": mins[1]}, WEIGHT_EQUIV))
    for name in ("two_freq", "sin", "const"):
        verdicts = []
        for nu in (quad, quart):
            rep = scan_bohr_periods(corpus.function(name), None, 0.1, Relation.identity(),
                                    MetricSpace("sup", weight=nu), ladder=(1, 10, 100))
            verdicts.append((rep.verdict, rep.inclusion_length))
        same = verdicts[0][0] == verdicts[1][0]
        rows.append(Check("weight-equiv", f"{name}: same verdict", same, 0.0 if same else -1.0,
                          {"nu_quad": verdicts[0], "nu_quart": verdicts[1]}, WEIGHT_EQUIV))
    return rows


SUITES: dict[str, Callable[[], list[Check]]] = {
    "holder": suite_holder,
    "embedding": suite_embedding,
    "sade": suite_levitan,
    "prcko": suite_difference,
    "telescoping": suite_telescoping,
    "transfer": suite_transfer,
    "stepanov-embed": suite_stepanov,
    "contraction": suite_contraction,
    "weight-equiv": suite_weight_equiv,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for key in SUITES for c in SUITES[key]()]
    try:
        return SUITES[name]()
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(SUITES)}, all") from None
