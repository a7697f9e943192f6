"""Domains, exactly evaluable functions, weights, exponents and quadrature grids.

Functions are closures, never sample arrays: a translate evaluates the
original closure at shifted points, so period defects carry no
interpolation error.  Every closure is vectorised: it receives an
``(N, n)`` float array of points and returns an ``(N, m)`` array (real or
complex).  Grids are only a device for quadrature and for scanning suprema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, NonFiniteError

#: Default per-axis truncation radius for unbounded domains.
DEFAULT_TRUNCATION = 50.0
#: Upper bound on the number of points of a single grid.
MAX_GRID_POINTS = 1 << 24
#: Sentinel for the exponent value p(x) = infinity; compared exactly.
INF_EXPONENT = math.inf

BOUNDED, UNBOUNDED, UNKNOWN = "bounded", "unbounded", "unknown"


def pairwise_sum(values, axis: int = 0) -> np.ndarray:
    """Deterministic pairwise reduction along ``axis``.

    numpy reduces a contiguous last axis with a fixed pairwise tree, so the
    axis is moved last and made contiguous first.  The result depends only
    on the input array, never on threading.
    """
    arr = np.ascontiguousarray(np.moveaxis(np.asarray(values), axis, -1))
    return np.add.reduce(arr, axis=-1)


def as_points(t, n: int) -> np.ndarray:
    """Coerce scalars, 1-d arrays (n == 1) or (N, n) arrays to (N, n) float."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if n == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise DimensionError(f"expected points of dimension {n}, got array of shape {np.shape(t)}")
    return arr


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned box with possibly infinite bounds."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) == 0 or len(lo) != len(hi):
            raise DimensionError("a box needs at least one axis and matching bounds")
        for a, b in zip(lo, hi):
            if math.isnan(a) or math.isnan(b) or a > b:
                raise ValueError(f"invalid axis bounds [{a}, {b}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def real_space(cls, n: int = 1) -> "DomainBox":
        return cls((-math.inf,) * n, (math.inf,) * n)

    @classmethod
    def interval(cls, a: float, b: float) -> "DomainBox":
        return cls((a,), (b,))

    @classmethod
    def cube(cls, radius: float, n: int = 1, center=None) -> "DomainBox":
        c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        return cls(tuple(c - radius), tuple(c + radius))

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def is_compact(self) -> bool:
        return all(math.isfinite(v) for v in self.lower + self.upper)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lower, self.upper))

    def contains(self, points) -> np.ndarray:
        p = as_points(points, self.n)
        return np.all((p >= np.array(self.lower)) & (p <= np.array(self.upper)), axis=1)

    def contains_box(self, other: "DomainBox") -> bool:
        self._check_dim(other)
        return all(a <= c and d <= b for a, b, c, d in zip(self.lower, self.upper, other.lower, other.upper))

    def minkowski_sum(self, other: "DomainBox") -> "DomainBox":
        self._check_dim(other)
        return DomainBox(
            tuple(a + c for a, c in zip(self.lower, other.lower)),
            tuple(b + d for b, d in zip(self.upper, other.upper)),
        )

    def shift(self, delta) -> "DomainBox":
        d = np.broadcast_to(np.asarray(delta, dtype=float), (self.n,))
        return DomainBox(tuple(np.array(self.lower) + d), tuple(np.array(self.upper) + d))

    def intersect(self, other: "DomainBox") -> "DomainBox":
        self._check_dim(other)
        lo = tuple(max(a, c) for a, c in zip(self.lower, other.lower))
        hi = tuple(min(b, d) for b, d in zip(self.upper, other.upper))
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("boxes do not intersect")
        return DomainBox(lo, hi)

    def truncate(self, radius: float = DEFAULT_TRUNCATION) -> "DomainBox":
        """Intersect with the cube [-radius, radius]^n (no-op on finite axes inside it)."""
        return self.intersect(DomainBox.cube(radius, self.n))

    def _check_dim(self, other: "DomainBox"):
        if other.n != self.n:
            raise DimensionError(f"box dimensions differ: {self.n} vs {other.n}")

    def to_list(self) -> list[list[float]]:
        return [list(self.lower), list(self.upper)]


def check_translation_closure(domain: DomainBox, shifts: DomainBox) -> bool:
    """True iff domain + shifts is contained in domain (exact for boxes)."""
    return domain.contains_box(domain.minkowski_sum(shifts))


class EvalFunction:
    """A vectorised closure ``R^n -> C^m`` with a declared domain.

    ``fn`` maps an ``(N, n)`` float array to an ``(N, m)`` array.  Calling
    the object coerces inputs and always returns a complex ``(N, m)`` array.
    """

    __slots__ = ("n", "m", "fn", "domain", "bounded", "label")

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], n: int = 1, m: int = 1,
                 domain: DomainBox | None = None, bounded: str = UNKNOWN, label: str = "<fn>"):
        if n < 1 or m < 1:
            raise DimensionError("n and m must be positive")
        if bounded not in (BOUNDED, UNBOUNDED, UNKNOWN):
            raise ValueError(f"bad boundedness hint {bounded!r}")
        self.n, self.m, self.fn, self.label = n, m, fn, label
        self.domain = DomainBox.real_space(n) if domain is None else domain
        if self.domain.n != n:
            raise DimensionError("domain dimension does not match n")
        self.bounded = bounded

    def __repr__(self):
        return f"EvalFunction({self.label!r}, n={self.n}, m={self.m})"

    def raw(self, points: np.ndarray) -> np.ndarray:
        """Evaluate on an (N, n) array, returning (N, m) in the closure's dtype."""
        out = np.asarray(self.fn(points))
        if out.ndim == 1:
            out = out.reshape(-1, 1)
        if out.shape != (points.shape[0], self.m):
            out = np.broadcast_to(out, (points.shape[0], self.m))
        return out

    def __call__(self, t) -> np.ndarray:
        return self.raw(as_points(t, self.n)).astype(complex, copy=False)

    def at(self, *coords) -> np.ndarray:
        """Value at a single point, shape (m,)."""
        return self(np.asarray(coords, dtype=float).reshape(1, self.n))[0]

    # -- algebra -----------------------------------------------------------
    def _combine(self, other, op, sym):
        if isinstance(other, EvalFunction):
            if other.n != self.n:
                raise DimensionError("operands have different input dimensions")
            if other.m not in (1, self.m) and self.m != 1:
                raise DimensionError("operands have incompatible output dimensions")
            m = max(self.m, other.m)
            a, b = self, other
            fn = lambda p: op(a.raw(p), b.raw(p))
            dom = self.domain.intersect(other.domain)
            hint = BOUNDED if self.bounded == BOUNDED and other.bounded == BOUNDED else UNKNOWN
            return EvalFunction(fn, self.n, m, dom, hint, f"({self.label} {sym} {other.label})")
        c = other
        a = self
        return EvalFunction(lambda p: op(a.raw(p), c), self.n, self.m, self.domain,
                            self.bounded, f"({self.label} {sym} {c})")

    def __add__(self, other):
        return self._combine(other, np.add, "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract, "-")

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._combine(other, np.multiply, "*")

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.true_divide, "/")

    def __neg__(self):
        a = self
        return EvalFunction(lambda p: -a.raw(p), self.n, self.m, self.domain, self.bounded, f"-{self.label}")

    def component(self, j: int) -> "EvalFunction":
        a = self
        return EvalFunction(lambda p: a.raw(p)[:, j:j + 1], self.n, 1, self.domain, self.bounded,
                            f"{self.label}[{j}]")


def from_callable(fn: Callable, n: int = 1, m: int = 1, label: str = "<callable>",
                  domain: DomainBox | None = None, bounded: str = UNKNOWN) -> EvalFunction:
    """Wrap a numpy function of the coordinates.

    For ``n == 1`` the callable receives a 1-d array of abscissae; otherwise it
    receives the ``(N, n)`` point array.  It may return shape (N,) or (N, m).
    """
    if n == 1:
        g = lambda p: fn(p[:, 0])
    else:
        g = fn
    return EvalFunction(g, n, m, domain, bounded, label)


def constant(value, n: int = 1) -> EvalFunction:
    v = np.atleast_1d(np.asarray(value))
    m = v.shape[0]
    return EvalFunction(lambda p: np.broadcast_to(v, (p.shape[0], m)), n, m,
                        bounded=BOUNDED, label=repr(value))


def translate(f: EvalFunction, tau) -> EvalFunction:
    """The translate t -> f(t + tau)."""
    shift = np.atleast_1d(np.asarray(tau, dtype=float))
    if shift.shape != (f.n,):
        raise DimensionError(f"shift of dimension {shift.shape[0]} for a function of dimension {f.n}")
    if not np.any(shift):
        return f
    g = f.fn
    return EvalFunction(lambda p: g(p + shift), f.n, f.m, f.domain.shift(-shift), f.bounded,
                        f"{f.label}(.+{shift.tolist() if f.n > 1 else float(shift[0])})")


@dataclass(frozen=True)
class ParameterSet:
    """Finite set B of parameter vectors x; empty means X = {0}."""

    vectors: tuple[tuple[complex, ...], ...] = ()

    def __post_init__(self):
        vecs = tuple(tuple(v) if isinstance(v, Iterable) else (v,) for v in self.vectors)
        if len({len(v) for v in vecs}) > 1:
            raise DimensionError("parameter vectors must share one dimension")
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return len(self.vectors[0]) if self.vectors else 0

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)


def bind(F: EvalFunction, x: Sequence[float]) -> EvalFunction:
    """Freeze the trailing ``len(x)`` inputs of ``F`` to the parameter ``x``."""
    d = len(x)
    if d == 0:
        return F
    n = F.n - d
    if n < 1:
        raise DimensionError("parameter dimension exceeds the function's input dimension")
    xv = np.asarray(x, dtype=float)
    dom = DomainBox(F.domain.lower[:n], F.domain.upper[:n])
    g = F.fn
    return EvalFunction(lambda p: g(np.hstack([p, np.broadcast_to(xv, (p.shape[0], d))])),
                        n, F.m, dom, F.bounded, f"{F.label}[x={list(x)}]")


def instances(F: EvalFunction, params: ParameterSet | None) -> list[EvalFunction]:
    """One bound function per parameter vector (or F itself for X = {0})."""
    if params is None or len(params) == 0:
        return [F]
    return [bind(F, x) for x in params]


class WeightFunction:
    """Strictly positive scalar weight nu."""

    def __init__(self, func: EvalFunction | float):
        if not isinstance(func, EvalFunction):
            func = constant(float(func))
        if func.m != 1:
            raise DimensionError("a weight must be scalar valued")
        self.func = func

    @property
    def n(self):
        return self.func.n

    @property
    def label(self):
        return self.func.label

    def values(self, points: np.ndarray) -> np.ndarray:
        v = self.func.raw(points)[:, 0]
        if np.iscomplexobj(v):
            if np.any(v.imag != 0):
                raise ValueError(f"weight {self.label} is not real valued")
            v = v.real
        return np.asarray(v, dtype=float)

    def check(self, points: np.ndarray) -> None:
        """Positivity and finiteness (so 1/nu is bounded) on the sampled points."""
        v = self.values(points)
        bad = ~np.isfinite(v) | (v <= 0)
        if np.any(bad):
            raise NonFiniteError(f"weight {self.label} is not finite and positive", points[np.argmax(bad)])


class ExponentFunction:
    """Exponent p with values in [1, inf]; ``INF_EXPONENT`` marks p = inf."""

    def __init__(self, func: EvalFunction | float):
        if not isinstance(func, EvalFunction):
            func = constant(float(func))
        if func.m != 1:
            raise DimensionError("an exponent must be scalar valued")
        self.func = func

    @property
    def label(self):
        return self.func.label

    def values(self, points: np.ndarray) -> np.ndarray:
        v = self.func.raw(points)[:, 0]
        if np.iscomplexobj(v):
            v = v.real
        v = np.asarray(v, dtype=float)
        if np.any(np.isnan(v)) or np.any(v < 1):
            raise ValueError(f"exponent {self.label} must take values in [1, inf]")
        return v


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor grid on a compact box; midpoint (cell centres) or trapezoid nodes."""

    box: DomainBox
    counts: tuple[int, ...]
    rule: str = "trapezoid"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.box.is_compact:
            raise ValueError("quadrature grids need a compact truncation box")
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != self.box.n or any(c < 2 for c in counts):
            raise ValueError("need one point count >= 2 per axis")
        if self.rule not in ("midpoint", "trapezoid"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if math.prod(counts) > MAX_GRID_POINTS:
            raise ValueError(f"grid of {math.prod(counts)} points exceeds cap {MAX_GRID_POINTS}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def uniform(cls, box: DomainBox, spacing: float | None = None, counts=None,
                rule: str = "trapezoid") -> "QuadratureGrid":
        if counts is None:
            if spacing is None:
                raise ValueError("give spacing or counts")
            counts = []
            for a, b in zip(box.lower, box.upper):
                cells = max(1, int(round((b - a) / spacing)))
                counts.append(cells + 1 if rule == "trapezoid" else max(cells, 2))
        elif isinstance(counts, int):
            counts = (counts,) * box.n
        return cls(box, tuple(counts), rule)

    @classmethod
    def interval(cls, a: float, b: float, count: int, rule: str = "trapezoid") -> "QuadratureGrid":
        return cls(DomainBox.interval(a, b), (count,), rule)

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def spacings(self) -> tuple[float, ...]:
        out = []
        for a, b, c in zip(self.box.lower, self.box.upper, self.counts):
            out.append((b - a) / (c - 1 if self.rule == "trapezoid" else c))
        return tuple(out)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacings)

    @property
    def size(self) -> int:
        return math.prod(self.counts)

    def axes(self) -> list[np.ndarray]:
        out = []
        for (a, b, c), h in zip(zip(self.box.lower, self.box.upper, self.counts), self.spacings):
            if self.rule == "trapezoid":
                ax = np.linspace(a, b, c)
            else:
                ax = a + h * (np.arange(c) + 0.5)
            out.append(ax)
        return out

    def points(self) -> np.ndarray:
        if "points" not in self._cache:
            axes = self.axes()
            if self.n == 1:
                pts = axes[0].reshape(-1, 1)
            else:
                pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
            pts.setflags(write=False)
            self._cache["points"] = pts
        return self._cache["points"]

    def weights(self) -> np.ndarray:
        if "weights" not in self._cache:
            per_axis = []
            for c, h in zip(self.counts, self.spacings):
                w = np.full(c, h)
                if self.rule == "trapezoid":
                    w[0] = w[-1] = h / 2
                per_axis.append(w)
            w = per_axis[0]
            for extra in per_axis[1:]:
                w = np.outer(w, extra).ravel()
            w.setflags(write=False)
            self._cache["weights"] = w
        return self._cache["weights"]

    def refine(self, factor: int = 2) -> "QuadratureGrid":
        if self.rule == "trapezoid":
            counts = tuple((c - 1) * factor + 1 for c in self.counts)
        else:
            counts = tuple(c * factor for c in self.counts)
        return QuadratureGrid(self.box, counts, self.rule)

    def with_box(self, box: DomainBox) -> "QuadratureGrid":
        """Same spacing policy on another box."""
        return QuadratureGrid.uniform(box, spacing=min(self.spacings), rule=self.rule)

    def describe(self) -> dict:
        return {"box": self.box.to_list(), "counts": list(self.counts), "rule": self.rule}


def default_grid(n: int = 1, radius: float = DEFAULT_TRUNCATION, spacing: float = 0.025) -> QuadratureGrid:
    return QuadratureGrid.uniform(DomainBox.cube(radius, n), spacing=spacing)


def sample(f: EvalFunction, grid: QuadratureGrid, finite: bool = True) -> np.ndarray:
    """Values of ``f`` on the grid nodes, shape (N, m); raises on non-finite samples."""
    pts = grid.points()
    vals = f.raw(pts)
    if finite:
        bad = ~np.isfinite(vals)
        if np.any(bad):
            row = int(np.argmax(np.any(bad, axis=1)))
            raise NonFiniteError(f"non-finite value of {f.label}", pts[row])
    return vals


def integrate(f: EvalFunction, grid: QuadratureGrid) -> np.ndarray:
    """Rule-weighted sum of samples, shape (m,), reduced by the pairwise tree."""
    vals = sample(f, grid)
    return pairwise_sum(vals * grid.weights()[:, None], axis=0).astype(complex)
