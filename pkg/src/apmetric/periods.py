"""Almost periods under a relation: Bohr scans, Levitan periods, recurrence, Bochner tails.

The central quantity is the period defect

    D(tau) = max_x d_M(F(. + tau; x), rho(F(.; x)))

computed with exact translates.  Scans walk a tau lattice ``j * step`` so
integer periods are hit exactly when ``step = 1/N``.  For metrics dominating
the (weighted) sup norm of the difference (sup, weighted sup, variation,
Hölder) candidates are first screened by the sup of the difference on
growing subsamples, which is a lower bound of the defect; only survivors
get the full metric.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, RangeError, SpecError
from .funcspace import (DomainBox, EvalFunction, ParameterSet, QuadratureGrid, check_translation_closure,
                        instances, translate)
from .metrics import DistanceResult, MetricSpace, membership_check

RELATIVELY_DENSE = "relatively_dense"
NOT_FOUND = "not_found_at_scale"
SCREENABLE = ("sup", "weighted_sup", "variation", "holder")
STAGES = (65, 1025)
CHUNK_POINTS = 1 << 20
MAX_CANDIDATES = 20_000_000


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("APMETRIC_THREADS", "1")))
    except ValueError:
        return 1


# -- relations -----------------------------------------------------------------
@dataclass(frozen=True)
class Relation:
    """Single-valued relation on C^m: identity, scale c, linear T, or a map."""

    kind: str = "identity"
    c: complex = 1.0
    matrix: np.ndarray | None = field(default=None, compare=False)
    fn: object = field(default=None, compare=False)
    label: str = "id"

    @classmethod
    def identity(cls) -> "Relation":
        return cls("identity")

    @classmethod
    def scale(cls, c: complex) -> "Relation":
        if c == 0:
            raise SpecError("scale relation needs c != 0")
        return cls("scale", complex(c), label=f"scale:{complex(c).real:g},{complex(c).imag:g}")

    @classmethod
    def linear(cls, T, label: str | None = None) -> "Relation":
        T = np.asarray(T, dtype=complex)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise DimensionError("linear relation needs a square matrix")
        return cls("linear", matrix=T, label=label or f"mat:{T.tolist()}")

    @classmethod
    def rotation(cls, angle: float) -> "Relation":
        c, s = math.cos(angle), math.sin(angle)
        return cls.linear([[c, -s], [s, c]], label=f"rot:{angle:g}")

    @classmethod
    def map(cls, fn, label: str = "fn") -> "Relation":
        """``fn`` maps an (N, m) complex array to an (N, m) array."""
        return cls("map", fn=fn, label=label)

    def apply(self, values: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return values
        if self.kind == "scale":
            return self.c * values
        if self.kind == "linear":
            if values.shape[1] != self.matrix.shape[0]:
                raise DimensionError("matrix size does not match the function's codimension")
            return values @ self.matrix.T
        out = np.asarray(self.fn(values))
        return out.reshape(values.shape[0], -1)

    def power(self, l: int) -> "Relation":
        if self.kind == "identity" or l == 1:
            return self
        if l == 0:
            return Relation.identity()
        if self.kind == "scale":
            return Relation.scale(self.c ** l)
        if self.kind == "linear":
            return Relation.linear(np.linalg.matrix_power(self.matrix, l), label=f"({self.label})^{l}")
        raise SpecError("powers are only defined for identity, scale and linear relations")

    def operator_norm(self) -> float:
        if self.kind == "identity":
            return 1.0
        if self.kind == "scale":
            return abs(self.c)
        if self.kind == "linear":
            return float(np.linalg.norm(self.matrix, 2))
        raise SpecError("operator norm needs a linear relation")


def parse_relation(text: str, m: int = 1) -> Relation:
    """``id`` | ``scale:<re>[,<im>]`` | ``mat:<path>`` | ``rot:<angle>`` | ``fn:<expr in u or u1..um>``."""
    text = text.strip()
    head, _, rest = text.partition(":")
    if head in ("id", "identity"):
        return Relation.identity()
    if head == "scale":
        parts = [float(v) for v in rest.split(",")]
        return Relation.scale(complex(parts[0], parts[1] if len(parts) > 1 else 0.0))
    if head == "rot":
        return Relation.rotation(float(rest))
    if head == "mat":
        return Relation.linear(load_matrix(rest), label=text)
    if head == "fn":
        from .exprdsl import eval_values, parse
        names = ("u",) if m == 1 else tuple(f"u{k + 1}" for k in range(m))
        expr = parse(rest, names=names)
        if expr.m != m:
            raise DimensionError(f"relation map has {expr.m} components, expected {m}")
        return Relation.map(lambda v: eval_values(expr, v), label=text)
    raise SpecError(f"unknown relation {text!r}")


def load_matrix(path: str) -> np.ndarray:
    """JSON nested list (entries real or [re, im]) or a whitespace table of complex literals."""
    with open(path) as fh:
        raw = fh.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError:
        return np.loadtxt(path, dtype=complex, ndmin=2)
    rows = [[complex(*v) if isinstance(v, list) else complex(v) for v in row] for row in data]
    return np.asarray(rows, dtype=complex)


# -- defects ---------------------------------------------------------------------
def _check_closure(F: EvalFunction, iprime: DomainBox | None):
    if iprime is not None and not check_translation_closure(F.domain, iprime):
        raise RangeError(f"I + I' is not contained in the domain of {F.label}")


def measure_period_defect(F: EvalFunction, params: ParameterSet | None, tau, rho: Relation,
                          M: MetricSpace, box: DomainBox | None = None,
                          membership: bool = True) -> DistanceResult:
    """max over parameters of d_M(F(.+tau;x), rho F(.;x)), with witness.

    For the variation and Hölder metrics F itself must lie in the space;
    otherwise the defect is +inf and the witness records the divergence.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.shape != (F.n - (params.dim if params else 0),):
        raise DimensionError("tau dimension differs from the function's")
    plan = M.plan(box)
    worst = None
    for Fx in instances(F, params):
        if membership and M.kind in ("variation", "holder"):
            chk = membership_check(Fx, M, plan.box)
            if not chk["member"]:
                return DistanceResult(math.inf, {"divergent_seminorm": chk["values"],
                                                 "spacings": chk["spacings"]}, plan.box.to_list(), M.kind)
        delta = Fx.raw(plan.points + tau) - rho.apply(Fx.raw(plan.points))
        r = plan.reduce(np.asarray(delta))
        if worst is None or r.value > worst.value:
            worst = r
    return worst


def period_defect(F, params, tau, rho: Relation, M: MetricSpace, box: DomainBox | None = None) -> float:
    return measure_period_defect(F, params, tau, rho, M, box).value


def levitan_defect(F: EvalFunction, tau, N: float, M: MetricSpace, rho: Relation | None = None,
                   params: ParameterSet | None = None) -> float:
    """Defect on the truncated region |t| <= N."""
    if N <= 0:
        raise SpecError("N must be positive")
    return period_defect(F, params, tau, rho or Relation.identity(), M, DomainBox.cube(N, F.n))


# -- the scan engine ---------------------------------------------------------------
class _Screen:
    """Batched defect evaluation for many tau values on one plan."""

    def __init__(self, F, params, rho: Relation, M: MetricSpace, box: DomainBox | None):
        self.plan = M.plan(box)
        self.M = M
        self.insts = instances(F, params)
        self.bases = [np.asarray(rho.apply(Fx.raw(self.plan.points))) for Fx in self.insts]
        self.screen = M.kind in SCREENABLE
        self.rho = rho
        core = self.plan.core if self.plan.core is not None else np.arange(self.plan.points.shape[0])
        nu = self.plan.weight_values
        self.stages = []
        if self.screen:
            for s in STAGES:
                if s >= core.size:
                    break
                idx = core[np.unique(np.linspace(0, core.size - 1, s).round().astype(int))]
                self.stages.append((idx, None if nu is None else nu[idx]))
            self.stages.append((core, None if nu is None else nu[core]))

    def _lower_bound(self, taus: np.ndarray, idx, nu) -> np.ndarray:
        pts = self.plan.points[idx]
        s, n = pts.shape
        out = np.zeros(taus.shape[0])
        per = max(1, CHUNK_POINTS // max(s, 1))
        for Fx, base in zip(self.insts, self.bases):
            b = base[idx]
            for k in range(0, taus.shape[0], per):
                tk = taus[k:k + per]
                shifted = (pts[None, :, :] + tk[:, None, :]).reshape(-1, n)
                vals = Fx.raw(shifted).reshape(tk.shape[0], s, -1) - b[None]
                mag = np.sqrt(np.sum(np.abs(vals) ** 2, axis=2))
                mag = np.where(np.isfinite(mag), mag, np.inf)
                if nu is not None:
                    mag = mag * nu[None, :]
                out[k:k + per] = np.maximum(out[k:k + per], mag.max(axis=1))
        return out

    def full(self, tau: np.ndarray) -> DistanceResult:
        worst = None
        for Fx, base in zip(self.insts, self.bases):
            r = self.plan.reduce(np.asarray(Fx.raw(self.plan.points + tau) - base))
            if worst is None or r.value > worst.value:
                worst = r
        return worst

    def good(self, taus: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
        """Indices of taus with defect <= eps and their defects."""
        alive = np.arange(taus.shape[0])
        for idx, nu in self.stages:
            if alive.size == 0:
                break
            lb = self._lower_bound(taus[alive], idx, nu)
            alive = alive[lb <= eps]
        vals = np.array([self.full(taus[j]).value for j in alive]) if alive.size else np.zeros(0)
        keep = vals <= eps
        return alive[keep], vals[keep]


def _run_chunks(fn, items: list, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class PeriodReport:
    eps: float
    metric: dict
    relation: str
    window: dict
    windows: list
    inclusion_length: float | None
    verdict: str
    ladder_tried: list
    good_taus: list = field(default_factory=list)
    membership: dict | None = None
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "metric": self.metric, "relation": self.relation, "window": self.window,
                "windows": self.windows, "inclusion_length": self.inclusion_length, "verdict": self.verdict,
                "ladder_tried": self.ladder_tried, "good_taus": self.good_taus[:200],
                "membership": self.membership, "stats": self.stats}


def _span(iprime: DomainBox, radius: float) -> tuple[float, float]:
    lo = max(iprime.lower[0], -radius)
    hi = min(iprime.upper[0], radius)
    if lo > hi:
        raise RangeError("the truncated I' is empty")
    return lo, hi


def scan_bohr_periods(F: EvalFunction, params: ParameterSet | None, eps: float, rho: Relation,
                      M: MetricSpace, Iprime: DomainBox | None = None, ladder: Sequence[float] = (1, 10, 100),
                      step: float = 0.01, box: DomainBox | None = None, center_factor: float = 2.0,
                      center_radius: float | None = None, threads: int | None = None) -> PeriodReport:
    """Smallest ladder value l such that every window B(t0, l), t0 in the truncated
    I', contains a tau in I' with defect <= eps.

    I' is truncated to ``[-R, R]`` with ``R = center_factor * l`` (or the fixed
    ``center_radius``), so windows never all contain the trivial tau = 0.
    For n = 1 coverage is decided exactly from the gaps between good taus.
    """
    if F.n != 1:
        return _scan_multi(F, params, eps, rho, M, Iprime, ladder, step, box, center_factor, threads)
    ladder = [float(v) for v in ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])) or not ladder or ladder[0] <= 0:
        raise SpecError("ladder must be positive and increasing")
    Iprime = Iprime or DomainBox.real_space(1)
    _check_closure(F, Iprime)
    threads = thread_count() if threads is None else threads
    plan_box = (box or M.default_box())
    window_info = {"iprime": Iprime.to_list(), "step": step, "box": plan_box.to_list(),
                   "center_factor": center_factor, "center_radius": center_radius}
    report = PeriodReport(eps, M.describe(), rho.label, window_info, [], None, NOT_FOUND, [])

    if M.kind in ("variation", "holder"):
        for Fx in instances(F, params):
            chk = membership_check(Fx, M, plan_box)
            if not chk["member"]:
                report.membership = chk
                report.ladder_tried = ladder
                return report
            report.membership = chk

    screen = _Screen(F, params, rho, M, plan_box)
    good: dict[int, float] = {}
    done = None  # evaluated j range
    to_tau = _lattice(step)
    n_cand = 0
    for l in ladder:
        report.ladder_tried.append(l)
        radius = center_radius if center_radius is not None else center_factor * l
        s_lo, s_hi = _span(Iprime, radius)
        t_lo, t_hi = max(Iprime.lower[0], s_lo - l), min(Iprime.upper[0], s_hi + l)
        j_lo, j_hi = math.ceil(t_lo / step - 1e-9), math.floor(t_hi / step + 1e-9)
        if done is None:
            pieces = [(j_lo, j_hi)]
        else:
            pieces = [(a, b) for a, b in ((j_lo, done[0] - 1), (done[1] + 1, j_hi)) if a <= b]
        new = sum(b - a + 1 for a, b in pieces)
        if n_cand + new > MAX_CANDIDATES:
            report.stats["stopped"] = f"candidate cap {MAX_CANDIDATES} reached"
            break
        n_cand += new
        chunks = []
        for a, b in pieces:
            for c0 in range(a, b + 1, 50_000):
                chunks.append(np.arange(c0, min(b, c0 + 49_999) + 1))

        def work(js):
            idx, vals = screen.good(to_tau(js).reshape(-1, 1), eps)
            return js[idx], vals

        for js, vals in _run_chunks(work, chunks, threads):
            good.update(zip(js.tolist(), vals.tolist()))
        done = (j_lo, j_hi) if done is None else (min(done[0], j_lo), max(done[1], j_hi))

        js_sorted = np.array(sorted(j for j in good if j_lo <= j <= j_hi), dtype=np.int64)
        taus_sorted = to_tau(js_sorted)
        covered = _covers(taus_sorted, s_lo, s_hi, l)
        report.windows = _window_witnesses(taus_sorted, js_sorted, good, s_lo, s_hi, l)
        report.stats = {"candidates": n_cand, "good": len(good), "span": [s_lo, s_hi]}
        if covered:
            report.verdict = RELATIVELY_DENSE
            report.inclusion_length = l
            break
    report.good_taus = to_tau(np.array(sorted(good), dtype=np.int64)).tolist()
    return report


def _lattice(step: float):
    """j -> tau; exact j / N when step = 1/N so integers are hit exactly."""
    if step <= 0:
        raise SpecError("scan step must be positive")
    inv = 1.0 / step
    N = round(inv)
    if N >= 1 and abs(inv - N) < 1e-9 * inv:
        return lambda js: np.asarray(js, dtype=float) / N
    return lambda js: np.asarray(js, dtype=float) * step


def _covers(taus: np.ndarray, lo: float, hi: float, l: float) -> bool:
    if taus.size == 0:
        return False
    if taus[0] - l > lo + 1e-12 or taus[-1] + l < hi - 1e-12:
        return False
    inside = taus[(taus >= lo - l) & (taus <= hi + l)]
    return bool(np.all(np.diff(inside) <= 2 * l + 1e-12))


def _window_witnesses(taus, js, good, lo, hi, l) -> list:
    out = []
    k = 0
    while True:
        t0 = lo + k * l / 2
        if t0 > hi + 1e-12:
            break
        sel = np.nonzero(np.abs(taus - t0) <= l)[0]
        if sel.size:
            best = min(sel, key=lambda i: (good[int(js[i])], abs(taus[i] - t0)))
            out.append({"center": t0, "tau": float(taus[best]), "defect": good[int(js[best])]})
        else:
            out.append({"center": t0, "tau": None, "defect": None})
        k += 1
    return out


def _scan_multi(F, params, eps, rho, M, Iprime, ladder, step, box, center_factor, threads) -> PeriodReport:
    """Brute-force lattice scan for n > 1 (small boxes only)."""
    n = F.n
    Iprime = Iprime or DomainBox.real_space(n)
    _check_closure(F, Iprime)
    screen = _Screen(F, params, rho, M, box)
    report = PeriodReport(eps, M.describe(), rho.label, {"iprime": Iprime.to_list(), "step": step},
                          [], None, NOT_FOUND, [])
    for l in ladder:
        report.ladder_tried.append(l)
        R = center_factor * l
        axes = []
        for d in range(n):
            lo = max(Iprime.lower[d], -R - l)
            hi = min(Iprime.upper[d], R + l)
            axes.append(np.arange(math.ceil(lo / step), math.floor(hi / step) + 1) * step)
        count = math.prod(a.size for a in axes)
        if count > 2_000_000:
            report.stats["stopped"] = "lattice too large for the multi-axis scan"
            break
        taus = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        idx, vals = screen.good(taus, eps)
        gt = taus[idx]
        centers_axes = [np.arange(max(Iprime.lower[d], -R), min(Iprime.upper[d], R) + 1e-12, l / 2)
                        for d in range(n)]
        centers = np.stack([g.ravel() for g in np.meshgrid(*centers_axes, indexing="ij")], axis=1)
        windows, ok = [], gt.shape[0] > 0
        for c in centers:
            if gt.shape[0] == 0:
                windows.append({"center": c.tolist(), "tau": None, "defect": None})
                continue
            dist = np.linalg.norm(gt - c, axis=1)
            sel = np.nonzero(dist <= l)[0]
            if sel.size == 0:
                ok = False
                windows.append({"center": c.tolist(), "tau": None, "defect": None})
            else:
                b = sel[np.argmin(vals[sel])]
                windows.append({"center": c.tolist(), "tau": gt[b].tolist(), "defect": float(vals[b])})
        report.windows = windows
        if ok:
            report.verdict = RELATIVELY_DENSE
            report.inclusion_length = l
            break
    return report


def scan_levitan_periods(F, eps: float, N: float, M: MetricSpace, ladder=(1, 10, 100), step: float = 0.01,
                         rho: Relation | None = None, params=None, **kw) -> PeriodReport:
    """Bohr scan with the defect restricted to |t| <= N."""
    return scan_bohr_periods(F, params, eps, rho or Relation.identity(), M, ladder=ladder, step=step,
                             box=DomainBox.cube(N, F.n), **kw)


def find_best_tau(F, params, rho: Relation, M: MetricSpace, lo: float, hi: float, step: float = 0.01,
                  box: DomainBox | None = None) -> tuple[float, float]:
    """Defect-minimising tau on the lattice in [lo, hi] (branch and bound on sup lower bounds)."""
    screen = _Screen(F, params, rho, M, box)
    js = np.arange(math.ceil(lo / step - 1e-9), math.floor(hi / step + 1e-9) + 1)
    taus = _lattice(step)(js).reshape(-1, 1)
    if screen.screen:
        idx, nu = screen.stages[0]
        lb = screen._lower_bound(taus, idx, nu)
        order = np.argsort(lb, kind="stable")
    else:
        lb = np.zeros(taus.shape[0])
        order = np.arange(taus.shape[0])
    best_tau, best = float(taus[order[0], 0]), math.inf
    for j in order:
        if lb[j] >= best:
            break
        v = screen.full(taus[j]).value
        if v < best:
            best, best_tau = v, float(taus[j, 0])
    return best_tau, best


@dataclass
class RecurrenceReport:
    taus: list
    defects: list
    increasing: bool
    slope: float | None
    trending_to_zero: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def recurrence_search(F, params, rho: Relation, M: MetricSpace, horizons: Sequence[float], step: float = 0.01,
                      box: DomainBox | None = None) -> RecurrenceReport:
    """For each horizon H the best tau in [H, 2H]; defects trend to zero when the
    least-squares slope of log(defect) against log(H) is negative (or all defects vanish)."""
    horizons = [float(h) for h in horizons]
    if any(b <= a for a, b in zip(horizons, horizons[1:])) or horizons[0] <= 0:
        raise SpecError("horizons must be positive and strictly increasing")
    taus, defects = [], []
    for H in horizons:
        t, d = find_best_tau(F, params, rho, M, H, 2 * H, step, box)
        taus.append(t)
        defects.append(d)
    increasing = all(abs(b) > abs(a) for a, b in zip(taus, taus[1:]))
    d = np.asarray(defects)
    slope = None
    if np.all(d <= 1e-12):
        trend = True
    else:
        logs = np.log(np.maximum(d, 1e-300))
        slope = float(np.polyfit(np.log(horizons), logs, 1)[0]) if len(horizons) > 1 else None
        trend = slope is not None and slope < 0 and d[-1] < d[0]
    return RecurrenceReport(taus, defects, increasing, slope, bool(trend))


# -- Bochner-type criterion ------------------------------------------------------------
@dataclass
class BochnerResult:
    indices: list
    cauchy_defect: float
    strong_defect: float | None
    limit_shift: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def translate_distance_matrix(F, params, seq, M: MetricSpace, box: DomainBox | None = None) -> np.ndarray:
    plan = M.plan(box)
    K = len(seq)
    D = np.zeros((K, K))
    for Fx in instances(F, params):
        vals = [np.asarray(Fx.raw(plan.points + np.atleast_1d(np.asarray(b, dtype=float)))) for b in seq]
        for i in range(K):
            for j in range(i + 1, K):
                v = plan.reduce(vals[i] - vals[j]).value
                if v > D[i, j]:
                    D[i, j] = D[j, i] = v
    return D


def bochner_subsequence(F, params, seq, M: MetricSpace, tail: int = 5, eps: float = 0.05,
                        strong: bool = False, box: DomainBox | None = None) -> BochnerResult:
    """Greedy farthest-point eps-net over translates; the largest cell is the subsequence.

    Centres are added farthest-first until every translate is within eps of a
    centre; each translate joins its nearest centre (lower index on ties).
    """
    K = len(seq)
    if not (K >= tail >= 2):
        raise SpecError("need len(seq) >= tail >= 2")
    D = translate_distance_matrix(F, params, seq, M, box)
    centres = [0]
    dist = D[0].copy()
    while dist.max() > eps:
        nxt = int(np.argmax(dist))
        centres.append(nxt)
        dist = np.minimum(dist, D[nxt])
    owner = np.array([centres[int(np.argmin(D[i, centres]))] for i in range(K)])
    sizes = {c: int(np.sum(owner == c)) for c in centres}
    best = max(centres, key=lambda c: (sizes[c], -c))
    chosen = [i for i in range(K) if owner[i] == best]
    tail_idx = chosen[-tail:]
    sub = D[np.ix_(tail_idx, tail_idx)]
    cauchy = float(sub.max()) if len(tail_idx) > 1 else 0.0
    last = np.atleast_1d(np.asarray(seq[tail_idx[-1]], dtype=float))
    strong_def = None
    if strong:
        plan = M.plan(box)
        worst = 0.0
        for Fx in instances(F, params):
            base = Fx.raw(plan.points)
            for i in tail_idx:
                shift = last - np.atleast_1d(np.asarray(seq[i], dtype=float))
                worst = max(worst, plan.reduce(Fx.raw(plan.points + shift) - base).value)
        strong_def = worst
    return BochnerResult(chosen, cauchy, strong_def, last.tolist())


# -- exact periodicity checks -------------------------------------------------------
def _grid_points(grid) -> np.ndarray:
    return grid.points() if isinstance(grid, QuadratureGrid) else np.asarray(grid, dtype=float).reshape(-1, 1)


def rho_periodic_defect(F: EvalFunction, omega, rho: Relation, grid) -> float:
    """max over the grid of |F(t + omega) - rho F(t)|."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if not np.any(w):
        raise SpecError("omega must be nonzero")
    pts = _grid_points(grid)
    delta = F.raw(pts + w) - rho.apply(F.raw(pts))
    return float(np.sqrt(np.sum(np.abs(delta) ** 2, axis=1)).max())


def telescoping_residual(F: EvalFunction, tau, T: Relation, l: int, grid) -> float:
    """Residual of F(t+l tau) - T^l F(t) = sum_j T^j [F(t+(l-j)tau) - T F(t+(l-j-1)tau)]."""
    if T.kind not in ("identity", "scale", "linear"):
        raise SpecError("telescoping needs a linear relation")
    if l < 1:
        raise SpecError("l must be at least 1")
    pts = _grid_points(grid)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    at = lambda k: F.raw(pts + k * tau)
    lhs = at(l) - T.power(l).apply(at(0))
    rhs = np.zeros_like(lhs, dtype=complex)
    for j in range(l):
        rhs = rhs + T.power(j).apply(at(l - j) - T.apply(at(l - j - 1)))
    return float(np.sqrt(np.sum(np.abs(lhs - rhs) ** 2, axis=1)).max())


def difference_period_check(F, tau1, tau2, rho: Relation, M: MetricSpace, params=None,
                            box: DomainBox | None = None) -> dict:
    """d(F(.+tau2-tau1), F) against c (D(tau1) + D(tau2)).

    The defects are measured on the box shifted by -tau1, where the
    substitution s = t - tau1 makes the bound exact; c is the largest ratio
    nu(t) / nu(t - tau1) over the plan points (1 when unweighted).
    """
    box = box or M.default_box()
    t1 = np.atleast_1d(np.asarray(tau1, dtype=float))
    t2 = np.atleast_1d(np.asarray(tau2, dtype=float))
    diff = measure_period_defect(F, params, t2 - t1, Relation.identity(), M, box, membership=False).value
    shifted = box.shift(-t1)
    d1 = measure_period_defect(F, params, t1, rho, M, shifted, membership=False).value
    d2 = measure_period_defect(F, params, t2, rho, M, shifted, membership=False).value
    c = 1.0
    if M.weight is not None:
        pts = M.plan(box).points
        c = float(np.max(M.weight.values(pts) / M.weight.values(pts - t1)))
    bound = c * (d1 + d2)
    return {"difference_defect": diff, "defect_tau1": d1, "defect_tau2": d2, "c": c,
            "bound": bound, "holds": diff <= bound + 1e-10}


def semi_periodic_defect(F: EvalFunction, omega: float, M: MetricSpace, K: int,
                         box: DomainBox | None = None) -> float:
    """d_M(F, G) for the omega-periodisation G = (1/K) sum_k F(. + k omega)."""
    if K < 1:
        raise SpecError("K must be at least 1")
    w = np.atleast_1d(np.asarray(omega, dtype=float))

    def g(p):
        acc = np.zeros((p.shape[0], F.m), dtype=complex)
        for k in range(K):
            acc = acc + F.raw(p + k * w)
        return acc / K

    G = EvalFunction(g, F.n, F.m, label=f"avg_{K}({F.label})")
    return M.distance(F, G, box)
