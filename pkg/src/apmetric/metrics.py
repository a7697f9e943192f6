"""Norm-induced metrics: weighted sup, Luxemburg, variation, Hölder, Stepanov, product.

Every metric is evaluated through a *plan*: a fixed set of sample points in
a truncation box plus a reducer mapping the sampled difference ``f - g`` to
a number.  Detectors reuse plans so that a translate costs one closure
evaluation per point and nothing else.

The variation and Hölder metrics are this package's own conventions:

* variation: ``sup |D| + sup_t V(t; D)`` where ``V(t; D)`` is the total
  variation of ``D`` on ``[t - w, t + w]`` (``w = 1`` by default);
* Hölder-alpha: ``sup |D| + sup |D(t) - D(s)| / |t - s|^alpha`` over sample
  pairs with ``0 < |t - s| <= w``.

Both are computed on a uniform grid, so they are the discrete seminorms of
the sampled function.  ``membership_check`` compares them across refinements
to decide whether a function belongs to the space at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BracketError, DimensionError, DomainError, NonFiniteError, SpecError
from .funcspace import (INF_EXPONENT, DomainBox, EvalFunction, ExponentFunction, QuadratureGrid,
                        WeightFunction, pairwise_sum)

KINDS = ("sup", "weighted_sup", "luxemburg", "variation", "holder", "stepanov", "product")
DEFAULT_RADIUS = 50.0
DEFAULT_SPACING = {"sup": 0.025, "weighted_sup": 0.025, "luxemburg": 0.025,
                   "variation": 0.01, "holder": 0.01, "stepanov": 0.01}
LAMBDA_LO, LAMBDA_HI, LAMBDA_GROW, MAX_BISECT = 1e-12, 1e12, 16.0, 200


@dataclass(frozen=True)
class DistanceResult:
    value: float
    witness: list | None = None
    box: list | None = None
    kind: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "witness": self.witness, "box": self.box, "kind": self.kind}


# -- scalar building blocks --------------------------------------------------
def phi(values: np.ndarray, p: np.ndarray) -> np.ndarray:
    """phi_p(t): t^p for finite p; for p = inf, 0 when t <= 1 and inf otherwise."""
    values = np.asarray(values, dtype=float)
    p = np.broadcast_to(np.asarray(p, dtype=float), values.shape)
    out = np.empty_like(values)
    inf_mask = p == INF_EXPONENT
    fin = ~inf_mask
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out[fin] = np.power(values[fin], p[fin])
    out[inf_mask] = np.where(values[inf_mask] <= 1.0, 0.0, math.inf)
    return out


def modular_values(a: np.ndarray, p: np.ndarray, weights: np.ndarray) -> float:
    """Quadrature of phi_p(a) with the given rule weights; +inf is a legal result."""
    terms = phi(a, p) * weights
    if np.any(np.isinf(terms)):
        return math.inf
    return float(pairwise_sum(terms))


def luxemburg_values(a: np.ndarray, p: np.ndarray, weights: np.ndarray, rtol: float = 1e-12) -> float:
    """inf{lam > 0 : rho(a / lam) <= 1} for nonnegative samples ``a``.

    Bisection in log(lam).  Over the p = inf region rho(a/lam) is finite only
    when lam >= max a there, which is used as a hard lower bound.
    """
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("non-finite sample in Luxemburg norm")
    if not np.any(a > 0):
        return 0.0
    inf_mask = p == INF_EXPONENT
    floor_lam = float(a[inf_mask].max()) if np.any(inf_mask) else 0.0
    rho = lambda lam: modular_values(a / lam, p, weights)
    if floor_lam > 0 and rho(floor_lam) <= 1.0:
        return floor_lam
    lo = max(LAMBDA_LO, floor_lam)
    hi = max(LAMBDA_HI, floor_lam * 2)
    while rho(hi) > 1.0:
        lo, hi = hi, hi * LAMBDA_GROW
        if hi > 1e300:
            raise BracketError("modular stays above 1 for every tested lambda; norm is unbounded")
    if floor_lam == 0:
        while rho(lo) <= 1.0:
            if lo < 1e-300:
                return 0.0
            hi, lo = lo, lo / LAMBDA_GROW
    for _ in range(MAX_BISECT):
        if hi <= lo * (1 + rtol):
            break
        mid = math.sqrt(lo * hi) if lo > 0 else hi / 2
        if rho(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def _vector_norm(delta: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(delta) ** 2, axis=1)) if delta.shape[1] > 1 else np.abs(delta[:, 0])


def _real_rows(delta: np.ndarray, pts: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(delta):
        scale = max(1.0, float(np.nanmax(np.abs(delta))) if delta.size else 1.0)
        bad = np.abs(delta.imag) > 1e-12 * scale
        if np.any(bad):
            raise DomainError("variation and Hölder metrics need a real difference",
                              pts[np.argmax(np.any(bad, axis=1))])
        delta = delta.real
    return delta


def _first_nonfinite(delta: np.ndarray, pts: np.ndarray):
    bad = ~np.all(np.isfinite(delta), axis=1)
    if np.any(bad):
        return pts[np.argmax(bad)].tolist()
    return None


# -- plans -------------------------------------------------------------------
@dataclass
class Plan:
    """Sample points and the reducer turning sampled differences into a distance."""

    points: np.ndarray
    reduce: Callable[[np.ndarray], DistanceResult]
    box: DomainBox
    # indices of ``points`` inside the box proper (used by sup lower bounds)
    core: np.ndarray | None = None
    weight_values: np.ndarray | None = None


@dataclass(frozen=True)
class MetricSpace:
    """A named metric; see the module docstring for the variation/Hölder forms."""

    kind: str
    weight: WeightFunction | None = None
    exponent: ExponentFunction | None = None
    alpha: float = 1.0
    omega: float = 1.0
    span: float = 1.0
    spacing: float | None = None
    radius: float = DEFAULT_RADIUS
    factors: tuple = ()
    n: int = 1
    _plans: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown metric kind {self.kind!r}")
        if self.kind == "sup" and self.weight is not None:
            object.__setattr__(self, "kind", "weighted_sup")
        if self.kind in ("luxemburg", "stepanov") and self.exponent is None:
            raise SpecError(f"{self.kind} metric needs an exponent")
        if self.kind == "holder" and not (0 < self.alpha <= 1):
            raise SpecError("Hölder exponent must lie in (0, 1]")
        if self.kind in ("variation", "holder", "stepanov") and self.n != 1:
            raise DimensionError(f"{self.kind} metric is defined for n = 1 only")
        if self.kind == "product" and not self.factors:
            raise SpecError("product metric needs factors")
        if self.omega <= 0 or self.span <= 0:
            raise SpecError("window lengths must be positive")

    # translation invariance holds for every kind: all are norm induced
    translation_invariant = True

    @property
    def h(self) -> float:
        return self.spacing if self.spacing is not None else DEFAULT_SPACING.get(self.kind, 0.025)

    def default_box(self) -> DomainBox:
        return DomainBox.cube(self.radius, self.n)

    def with_spacing(self, h: float) -> "MetricSpace":
        return MetricSpace(self.kind, self.weight, self.exponent, self.alpha, self.omega, self.span,
                           h, self.radius, self.factors, self.n)

    def describe(self) -> dict:
        d = {"kind": self.kind, "spacing": self.h, "radius": self.radius}
        if self.weight is not None:
            d["nu"] = self.weight.label
        if self.exponent is not None:
            d["p"] = self.exponent.label
        if self.kind == "holder":
            d["alpha"] = self.alpha
        if self.kind in ("variation", "holder"):
            d["window"] = self.span
        if self.kind == "stepanov":
            d["omega"] = self.omega
        if self.kind == "product":
            d["factors"] = [f.describe() for f in self.factors]
        return d

    # -- plan construction ---------------------------------------------------
    def plan(self, box: DomainBox | None = None) -> Plan:
        box = self.default_box() if box is None else box
        key = (box.lower, box.upper)
        if key not in self._plans:
            if len(self._plans) > 64:
                self._plans.clear()
            self._plans[key] = getattr(self, f"_plan_{self.kind}")(box)
        return self._plans[key]

    def _weights_on(self, pts: np.ndarray) -> np.ndarray:
        if self.weight is None:
            return np.ones(pts.shape[0])
        self.weight.check(pts)
        return self.weight.values(pts)

    def _plan_sup(self, box: DomainBox) -> Plan:
        grid = QuadratureGrid.uniform(box, spacing=self.h, rule="trapezoid")
        pts = grid.points()
        nu = self._weights_on(pts)
        kind = self.kind
        blist = box.to_list()

        def reduce(delta):
            wit = _first_nonfinite(delta, pts)
            if wit is not None:
                return DistanceResult(math.inf, wit, blist, kind)
            vals = _vector_norm(delta) * nu
            j = int(np.argmax(vals))
            return DistanceResult(float(vals[j]), pts[j].tolist(), blist, kind)

        return Plan(pts, reduce, box, np.arange(pts.shape[0]), nu)

    _plan_weighted_sup = _plan_sup

    def _plan_luxemburg(self, box: DomainBox) -> Plan:
        grid = QuadratureGrid.uniform(box, spacing=self.h, rule="trapezoid")
        pts = grid.points()
        nu = self._weights_on(pts)
        p = self.exponent.values(pts)
        w = grid.weights()
        blist = box.to_list()

        def reduce(delta):
            wit = _first_nonfinite(delta, pts)
            if wit is not None:
                return DistanceResult(math.inf, wit, blist, "luxemburg")
            a = _vector_norm(delta) * nu
            return DistanceResult(luxemburg_values(a, p, w), pts[int(np.argmax(a))].tolist(), blist,
                                  "luxemburg")

        return Plan(pts, reduce, box, None, nu)

    def _extended_line(self, box: DomainBox):
        a, b = box.lower[0], box.upper[0]
        h = self.h
        k = max(1, int(round(self.span / h)))
        cells = max(1, int(round((b - a) / h)))
        hh = (b - a) / cells
        idx = np.arange(-k, cells + k + 1)
        x = a + hh * idx
        core = np.arange(k, k + cells + 1)
        return x.reshape(-1, 1), core, k, hh

    def _plan_variation(self, box: DomainBox) -> Plan:
        pts, core, k, _ = self._extended_line(box)
        blist = box.to_list()
        lo, hi = core[0], core[-1]

        def reduce(delta):
            wit = _first_nonfinite(delta, pts)
            if wit is not None:
                return DistanceResult(math.inf, wit, blist, "variation")
            d = _real_rows(delta, pts)
            sup = _vector_norm(d[lo:hi + 1]).max()
            steps = _vector_norm(np.diff(d, axis=0))
            csum = np.concatenate([[0.0], np.cumsum(steps)])
            centers = np.arange(lo, hi + 1)
            var = csum[centers + k] - csum[centers - k]
            j = int(np.argmax(var))
            return DistanceResult(float(sup + var[j]), pts[centers[j]].tolist(), blist, "variation")

        return Plan(pts, reduce, box, core)

    def _plan_holder(self, box: DomainBox) -> Plan:
        pts, core, k, hh = self._extended_line(box)
        blist = box.to_list()
        lo, hi = core[0], core[-1]
        lags = sorted({1 << e for e in range(int(math.log2(k)) + 1)} | {k})
        alpha = self.alpha

        def reduce(delta):
            wit = _first_nonfinite(delta, pts)
            if wit is not None:
                return DistanceResult(math.inf, wit, blist, "holder")
            d = _real_rows(delta, pts)
            sup = _vector_norm(d[lo:hi + 1]).max()
            best, where = 0.0, None
            for lag in lags:
                q = _vector_norm(d[lag:] - d[:-lag]) / (lag * hh) ** alpha
                j = int(np.argmax(q))
                if q[j] > best:
                    best, where = float(q[j]), pts[j].tolist()
            return DistanceResult(float(sup + best), where, blist, "holder")

        return Plan(pts, reduce, box, core)

    def tiles(self, box: DomainBox) -> list[tuple[float, float]]:
        a, b = box.lower[0], box.upper[0]
        count = int(math.floor((b - a) / self.omega + 1e-9))
        if count < 1:
            raise SpecError("window shorter than one Stepanov tile")
        return [(a + d * self.omega, a + (d + 1) * self.omega) for d in range(count)]

    def _plan_stepanov(self, box: DomainBox) -> Plan:
        tiles = self.tiles(box)
        c = max(2, int(round(self.omega / self.h)))
        pieces = [QuadratureGrid(DomainBox.interval(lo, hi), (c,), "midpoint") for lo, hi in tiles]
        pts = np.concatenate([g.points() for g in pieces])
        w = pieces[0].weights()
        nu = self._weights_on(pts)
        p = self.exponent.values(pts)
        blist = box.to_list()

        def reduce(delta):
            wit = _first_nonfinite(delta, pts)
            if wit is not None:
                return DistanceResult(math.inf, wit, blist, "stepanov")
            a = _vector_norm(delta) * nu
            best, where = 0.0, tiles[0][0]
            for d, (lo, _) in enumerate(tiles):
                sl = slice(d * c, (d + 1) * c)
                val = luxemburg_values(a[sl], p[sl], w)
                if val > best:
                    best, where = val, lo
            return DistanceResult(best, [where], blist, "stepanov")

        return Plan(pts, reduce, box, None, nu)

    def _plan_product(self, box: DomainBox) -> Plan:
        subs = [f.plan(box) for f in self.factors]
        sizes = [s.points.shape[0] for s in subs]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        pts = np.concatenate([s.points for s in subs])
        nf = len(subs)

        def reduce(delta):
            total, parts = 0.0, []
            for i, s in enumerate(subs):
                block = delta[offsets[i]:offsets[i + 1]]
                if delta.shape[1] == nf and nf > 1:
                    block = block[:, i:i + 1]
                r = s.reduce(block)
                parts.append(r.value)
                total += r.value
            return DistanceResult(total, parts, box.to_list(), "product")

        return Plan(pts, reduce, box)

    # -- public API -----------------------------------------------------------
    def measure(self, f, g=None, box: DomainBox | None = None) -> DistanceResult:
        """d(f, g) with witness; ``g=None`` gives the norm of ``f``.

        For the product kind, ``f`` and ``g`` may be sequences with one entry
        per factor; a single function with one component per factor is split.
        """
        if self.kind == "product" and isinstance(f, (list, tuple)):
            return self._product_lists(f, g, box)
        plan = self.plan(box)
        delta = f.raw(plan.points)
        if g is not None:
            if (g.n, g.m) != (f.n, f.m):
                raise DimensionError("functions differ in dimension")
            delta = delta - g.raw(plan.points)
        return plan.reduce(np.asarray(delta))

    def _product_lists(self, fs, gs, box) -> DistanceResult:
        if gs is None:
            gs = [None] * len(fs)
        if not (len(fs) == len(gs) == len(self.factors)):
            raise DimensionError("product metric needs one function per factor")
        parts = [fac.measure(f, g, box) for fac, f, g in zip(self.factors, fs, gs)]
        return DistanceResult(sum(p.value for p in parts), [p.value for p in parts],
                              (box or self.default_box()).to_list(), "product")

    def distance(self, f, g=None, box: DomainBox | None = None) -> float:
        return self.measure(f, g, box).value

    def norm(self, f, box: DomainBox | None = None) -> float:
        return self.measure(f, None, box).value


# -- direct operations ---------------------------------------------------------
def _grid_box(grid: QuadratureGrid):
    return grid.points(), grid.weights()


def sup_distance(f: EvalFunction, g: EvalFunction, nu: WeightFunction | None = None,
                 grid: QuadratureGrid | None = None) -> DistanceResult:
    """Grid maximum of |f - g| nu; +inf with a witness at non-finite samples."""
    if grid is None:
        return MetricSpace("sup", weight=nu, n=f.n).measure(f, g)
    pts = grid.points()
    delta = f.raw(pts) - g.raw(pts)
    wit = _first_nonfinite(delta, pts)
    if wit is not None:
        return DistanceResult(math.inf, wit, grid.box.to_list(), "sup")
    w = np.ones(pts.shape[0]) if nu is None else nu.values(pts)
    vals = _vector_norm(delta) * w
    j = int(np.argmax(vals))
    return DistanceResult(float(vals[j]), pts[j].tolist(), grid.box.to_list(),
                          "sup" if nu is None else "weighted_sup")


def modular(f: EvalFunction, p: ExponentFunction, grid: QuadratureGrid) -> float:
    pts, w = _grid_box(grid)
    vals = f.raw(pts)
    if _first_nonfinite(vals, pts) is not None:
        return math.inf
    return modular_values(_vector_norm(vals), p.values(pts), w)


def luxemburg_norm(f: EvalFunction, p: ExponentFunction, nu: WeightFunction | None,
                   grid: QuadratureGrid) -> float:
    pts, w = _grid_box(grid)
    vals = f.raw(pts)
    wit = _first_nonfinite(vals, pts)
    if wit is not None:
        raise NonFiniteError(f"non-finite value of {f.label}", wit)
    a = _vector_norm(vals) * (1.0 if nu is None else nu.values(pts))
    return luxemburg_values(a, p.values(pts), w)


def variation_distance(f: EvalFunction, g: EvalFunction | None, box: DomainBox,
                       spacing: float = 0.01, window: float = 1.0) -> DistanceResult:
    return MetricSpace("variation", spacing=spacing, span=window).measure(f, g, box)


def holder_distance(f: EvalFunction, g: EvalFunction | None, alpha: float, box: DomainBox,
                    spacing: float = 0.01, window: float = 1.0) -> DistanceResult:
    return MetricSpace("holder", alpha=alpha, spacing=spacing, span=window).measure(f, g, box)


def stepanov_norm(f: EvalFunction, p: ExponentFunction, omega: float, box: DomainBox,
                  spacing: float = 0.01, nu: WeightFunction | None = None) -> float:
    return MetricSpace("stepanov", exponent=p, omega=omega, spacing=spacing, weight=nu).norm(f, box)


def product_distance(fs: Sequence[EvalFunction], gs: Sequence[EvalFunction],
                     factors: Sequence[MetricSpace], box: DomainBox | None = None) -> float:
    if not (len(fs) == len(gs) == len(factors)):
        raise DimensionError("product metric needs equal numbers of functions and factors")
    return float(sum(fac.distance(f, g, box) for fac, f, g in zip(factors, fs, gs)))


def verify_holder_inequality(u: EvalFunction, v: EvalFunction, p: ExponentFunction,
                             q: ExponentFunction, r: ExponentFunction, grid: QuadratureGrid) -> float:
    """Margin 2|u|_p |v|_r - |uv|_q; nonnegative means the inequality holds."""
    pts = grid.points()
    inv = lambda e: np.where(e == INF_EXPONENT, 0.0, 1.0 / e)
    gap = np.abs(inv(q.values(pts)) - inv(p.values(pts)) - inv(r.values(pts)))
    if np.any(gap > 1e-9):
        raise SpecError("exponents violate 1/q = 1/p + 1/r on the grid")
    uv = EvalFunction(lambda x: u.raw(x) * v.raw(x), u.n, 1, label="uv")
    return 2 * luxemburg_norm(u, p, None, grid) * luxemburg_norm(v, r, None, grid) \
        - luxemburg_norm(uv, q, None, grid)


def embedding_constant_check(f: EvalFunction, p: ExponentFunction, q: ExponentFunction,
                             grid: QuadratureGrid) -> float:
    """Margin 2 (1 + |Omega|) |f|_p - |f|_q for q <= p on a finite-measure box."""
    pts = grid.points()
    if np.any(q.values(pts) > p.values(pts)):
        raise SpecError("embedding needs q <= p pointwise")
    return 2 * (1 + grid.box.volume) * luxemburg_norm(f, p, None, grid) - luxemburg_norm(f, q, None, grid)


# -- membership in the variation / Hölder classes ---------------------------------
MEMBERSHIP_RADIUS = 5.0


def membership_check(f: EvalFunction, metric: MetricSpace, box: DomainBox | None = None,
                     radius: float = MEMBERSHIP_RADIUS) -> dict:
    """Does ``f`` have a finite variation/Hölder norm?

    The discrete seminorm is computed at spacings h, h/4 and h/16 on the box
    cut to ``[-radius, radius]``.  A norm that keeps growing by a fixed
    absolute amount under refinement (both increments > 0.5 and the second
    at least half the first) is declared divergent.  Other kinds always pass.
    """
    if metric.kind not in ("variation", "holder"):
        return {"member": True, "values": [], "spacings": []}
    box = metric.default_box() if box is None else box
    cut = box.truncate(radius)
    hs = [metric.h, metric.h / 4, metric.h / 16]
    vals = [metric.with_spacing(h).norm(f, cut) for h in hs]
    inc1, inc2 = vals[1] - vals[0], vals[2] - vals[1]
    divergent = (not all(math.isfinite(v) for v in vals)) or (inc1 > 0.5 and inc2 > 0.5 and inc2 >= 0.5 * inc1)
    return {"member": not divergent, "values": vals, "spacings": hs, "box": cut.to_list()}


# -- metric mini-language --------------------------------------------------------
def _split_top(text: str, sep: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out]


_ALIASES = {"sup": "sup", "lux": "luxemburg", "luxemburg": "luxemburg", "var": "variation",
            "variation": "variation", "holder": "holder", "stepanov": "stepanov", "prod": "product",
            "product": "product", "wsup": "weighted_sup"}


def parse_metric_spec(spec: str, n: int = 1, radius: float | None = None,
                      spacing: float | None = None) -> MetricSpace:
    """Build a MetricSpace from ``kind[:key=value,...]``.

    Keys: ``nu`` and ``p`` (expressions), ``alpha``, ``omega``, ``window``,
    ``h`` (grid spacing), ``R`` (truncation radius).  ``prod:[s1;s2]`` nests.
    """
    from .exprdsl import compile_expr

    spec = spec.strip()
    head, _, rest = spec.partition(":")
    kind = _ALIASES.get(head.strip())
    if kind is None:
        raise SpecError(f"unknown metric kind {head!r}")
    kw: dict = {"n": n}
    if radius is not None:
        kw["radius"] = radius
    if spacing is not None:
        kw["spacing"] = spacing
    if kind == "product":
        body = rest.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise SpecError("product spec must look like prod:[spec;spec]")
        kw["factors"] = tuple(parse_metric_spec(s, n, radius, spacing) for s in _split_top(body[1:-1], ";"))
        return MetricSpace("product", **kw)
    if rest.strip():
        for item in _split_top(rest, ","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq:
                raise SpecError(f"expected key=value in metric spec, got {item!r}")
            try:
                if key == "nu":
                    kw["weight"] = WeightFunction(compile_expr(val, n))
                elif key == "p":
                    kw["exponent"] = ExponentFunction(compile_expr(val, n))
                elif key in ("alpha", "omega"):
                    kw[key] = float(val)
                elif key == "window":
                    kw["span"] = float(val)
                elif key == "h":
                    kw["spacing"] = float(val)
                elif key == "R":
                    kw["radius"] = float(val)
                else:
                    raise SpecError(f"unknown metric parameter {key!r}")
            except ValueError as exc:
                if isinstance(exc, SpecError):
                    raise
                raise SpecError(f"bad value for {key!r}: {exc}") from exc
    return MetricSpace(kind, **kw)


def stepanov_embedding_check(f: EvalFunction, p: ExponentFunction, nu: WeightFunction, box: DomainBox,
                             omega: float = 1.0, spacing: float = 0.01) -> dict:
    """Margin S |f|_S - |f nu|_p with S = sum over tiles of sup nu and |f|_S the
    unweighted sup-tile Stepanov norm; both sides use the same midpoint tiles."""
    M = MetricSpace("stepanov", exponent=p, omega=omega, spacing=spacing)
    plan = M.plan(box)
    pts = plan.points
    tiles = M.tiles(box)
    c = pts.shape[0] // len(tiles)
    nu_v = nu.values(pts)
    S = float(sum(nu_v[d * c:(d + 1) * c].max() for d in range(len(tiles))))
    step_norm = plan.reduce(np.asarray(f.raw(pts))).value
    w = np.full(pts.shape[0], omega / c)
    lhs = luxemburg_values(_vector_norm(np.asarray(f.raw(pts))) * nu_v, p.values(pts), w)
    return {"weighted_norm": lhs, "stepanov_norm": step_norm, "S": S, "margin": S * step_norm - lhs,
            "box": box.to_list(), "tiles": len(tiles)}
