"""Named example functions and weights with their expected properties.

Every tag records the property, its expected truth value and where the
claim comes from (a short description of the construction or result).
Negative tags are checked numerically as "defect bounded away from zero at
scan scale", never as proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from .funcspace import BOUNDED, UNBOUNDED, UNKNOWN, DomainBox, EvalFunction, WeightFunction
from .exprdsl import compile_expr

_TRI = "pw(4*frac((X+1)/4) < 2, 4*frac((X+1)/4) - 1, 3 - 4*frac((X+1)/4))"


def _tri(arg: str) -> str:
    """Period-4 triangle wave equal to u on [-1, 1) and 2 - u on [1, 3)."""
    return _TRI.replace("X", arg)


@dataclass(frozen=True)
class Tag:
    value: bool
    citation: str


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    text: str
    role: str  # "function" | "weight"
    description: str
    tags: dict = field(default_factory=dict)
    n: int = 1
    lower: float = -math.inf
    upper: float = math.inf
    bounded: str = UNKNOWN
    box: tuple = (-50.0, 50.0)

    @property
    def domain(self) -> DomainBox:
        return DomainBox((self.lower,) * self.n, (self.upper,) * self.n)

    @cached_property
    def function(self) -> EvalFunction:
        return compile_expr(self.text, self.n, self.domain, self.bounded, label=self.name)

    @property
    def weight(self) -> WeightFunction:
        return WeightFunction(self.function)

    @property
    def truncation(self) -> DomainBox:
        return DomainBox((self.box[0],) * self.n, (self.box[1],) * self.n)

    def to_dict(self) -> dict:
        return {"name": self.name, "definition": self.text, "role": self.role, "description": self.description,
                "domain": self.domain.to_list(), "bounded": self.bounded, "truncation": list(self.box),
                "tags": {k: {"value": t.value, "citation": t.citation} for k, t in self.tags.items()}}


AP_CLASSICAL = "sums of continuous periodic functions are Bohr almost periodic"
STOJ_I = "counterexample pair: sin(sqrt2 pi t) plus a continuous oscillating piecewise term; " \
         "almost periodic but not almost periodic in variation"
STOJ_II = "counterexample pair: arcsin of two incommensurate triangle waves; " \
          "almost periodic in variation but not Lipschitz almost periodic"
LEVITAN = "1/(2 + cos t + cos sqrt2 t) is Levitan N-almost periodic and unbounded"
WEIGHTED = "vanishing weights at infinity make the Levitan example almost periodic in the weighted sup metric"
EQUIV = "1/(t^2+1) and 1/(t^4+1) give the same almost periodicity classes without being comparable"
RECUR = "uniformly recurrent functions exist in weighted spaces on [0, inf) iff liminf of the weight is 0"

_ENTRIES = [
    CorpusEntry("two_freq", "sin(t) + sin(sqrt(2)*t)", "function", "two incommensurate carriers",
                {"ap": Tag(True, AP_CLASSICAL), "bounded": Tag(True, AP_CLASSICAL),
                 "periodic": Tag(False, "frequencies 1 and sqrt2 are incommensurate")}, bounded=BOUNDED),
    CorpusEntry("stojko1_sum", "sin(sqrt(2)*pi*t) + pw(frac(t) == 0, 0, frac(t)*sin(pi/frac(t)))", "function",
                "sin(sqrt2 pi t) plus (t-k) sin(pi/(t-k)) on (k, k+1), 0 at integers",
                {"ap": Tag(True, STOJ_I), "ap_in_variation": Tag(False, STOJ_I), "bounded": Tag(True, STOJ_I)},
                bounded=BOUNDED),
    CorpusEntry("stojko2_sum", f"arcsin({_tri('t')}) + arcsin({_tri('sqrt(2)*t')})", "function",
                "arcsin(tri(t)) + arcsin(tri(sqrt2 t)) with the period-4 triangle wave tri",
                {"ap": Tag(True, STOJ_II), "ap_in_variation": Tag(True, STOJ_II),
                 "lipschitz_ap": Tag(False, STOJ_II), "bounded": Tag(True, STOJ_II)}, bounded=BOUNDED),
    CorpusEntry("levitan_unbounded", "1/(2 + cos(t) + cos(sqrt(2)*t))", "function", LEVITAN,
                {"levitan": Tag(True, LEVITAN), "bounded": Tag(False, LEVITAN), "ap": Tag(False, LEVITAN),
                 "weighted_ap_nu_quad": Tag(True, WEIGHTED)}, bounded=UNBOUNDED),
    CorpusEntry("rot2d", "[cos(t), sin(t)]", "function", "unit circle; a quarter-turn rotation shifts it by pi/2",
                {"periodic": Tag(True, "2 pi periodic"), "rotation_periodic": Tag(True, "F(t + pi/2) = R F(t)")},
                bounded=BOUNDED),
    CorpusEntry("const", "1", "function", "constant one", {"ap": Tag(True, "constants are periodic"),
                                                            "bounded": Tag(True, "constant")}, bounded=BOUNDED),
    CorpusEntry("sin", "sin(t)", "function", "sine", {"ap": Tag(True, AP_CLASSICAL)}, bounded=BOUNDED),
    CorpusEntry("sin_small_perturbed", "sin(t) + 0.01*sin(sqrt(2)*t)", "function",
                "2 pi periodic up to a small incommensurate part", {"ap": Tag(True, AP_CLASSICAL)}, bounded=BOUNDED),
    CorpusEntry("recurrent_exp", "sin(t)", "function",
                "member of the space weighted by exp(-t) on [0, inf)",
                {"uniformly_recurrent_nu_exp": Tag(True, RECUR)}, lower=0.0, bounded=BOUNDED, box=(0.0, 50.0)),
    CorpusEntry("recurrent_bounded", "sin(t)/(1 + t)", "function",
                "member of the space weighted by 2 + sin t on [0, inf)",
                {"uniformly_recurrent_nu_bounded": Tag(False, RECUR)}, lower=0.0, bounded=BOUNDED, box=(0.0, 50.0)),
    CorpusEntry("nu_quad", "1/(t^2 + 1)", "weight", "weight vanishing quadratically",
                {"vanishes_at_infinity": Tag(True, WEIGHTED), "equivalent_to_nu_quart": Tag(True, EQUIV)},
                bounded=BOUNDED),
    CorpusEntry("nu_quart", "1/(t^4 + 1)", "weight", "weight vanishing quartically",
                {"vanishes_at_infinity": Tag(True, WEIGHTED), "equivalent_to_nu_quad": Tag(True, EQUIV),
                 "comparable_to_nu_quad": Tag(False, EQUIV)}, bounded=BOUNDED),
    CorpusEntry("nu_exp", "exp(-t)", "weight", "exponentially decaying weight on [0, inf)",
                {"liminf_zero": Tag(True, RECUR)}, lower=0.0, bounded=BOUNDED, box=(0.0, 50.0)),
    CorpusEntry("nu_bounded", "2 + sin(t)", "weight", "weight bounded away from zero",
                {"liminf_zero": Tag(False, RECUR)}, bounded=BOUNDED),
]

_REGISTRY = {e.name: e for e in _ENTRIES}


def get(name: str) -> CorpusEntry:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown corpus entry {name!r}; known: {', '.join(names())}") from None


def names() -> list[str]:
    return sorted(_REGISTRY)


def expected(name: str) -> dict:
    return dict(get(name).tags)


def function(name: str) -> EvalFunction:
    return get(name).function
