"""Operations that preserve almost periodicity: convolutions, the heat semigroup,
infinite convolution products with operator families, superposition operators,
and the submultiplicative weight inequality they rely on.

Infinite-range integrals are truncated, and each truncation is checked by
recomputing at twice the radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, DomainError, RadiusError, SpecError
from .funcspace import (BOUNDED, DomainBox, EvalFunction, ParameterSet, QuadratureGrid, WeightFunction, bind,
                        pairwise_sum)

TAIL_RTOL = 1e-6
EVAL_CHUNK = 1 << 22


def check_weight_submultiplicative(nu: WeightFunction, w: WeightFunction, grid: QuadratureGrid,
                                   max_points: int = 1500) -> float:
    """max over sampled (x, y) of nu(x + y) - nu(x) w(y); <= 0 means the inequality holds."""
    if nu.n != w.n:
        raise DimensionError("weights differ in dimension")
    pts = grid.points()
    if pts.shape[0] > max_points:
        pts = pts[np.unique(np.linspace(0, pts.shape[0] - 1, max_points).round().astype(int))]
    nx = nu.values(pts)
    wy = w.values(pts)
    worst = -math.inf
    for k in range(pts.shape[0]):
        s = pts + pts[k]
        worst = max(worst, float(np.max(nu.values(s) - nx * wy[k])))
    return worst


def _sigma_grid(radius: float, n: int, spacing: float | None, nodes: int = 2001) -> QuadratureGrid:
    box = DomainBox.cube(radius, n)
    if spacing is None:
        return QuadratureGrid(box, (nodes,) * n, "trapezoid")
    return QuadratureGrid.uniform(box, spacing=spacing, rule="trapezoid")


def _abs_mass(h: EvalFunction, grid: QuadratureGrid, w: WeightFunction | None = None) -> float:
    pts = grid.points()
    a = np.abs(h.raw(pts)[:, 0])
    if w is not None:
        a = a * w.values(pts)
    return float(pairwise_sum(a * grid.weights()))


def tail_check(h: EvalFunction, radius: float, spacing: float | None = None, w: WeightFunction | None = None,
               rtol: float = TAIL_RTOL) -> dict:
    """Relative change of the (weighted) L1 mass of h between radius and 2 radius."""
    inner = _abs_mass(h, _sigma_grid(radius, h.n, spacing), w)
    outer = _abs_mass(h, _sigma_grid(2 * radius, h.n, spacing), w)
    rel = abs(outer - inner) / outer if outer > 0 else 0.0
    return {"inner": inner, "outer": outer, "relative_change": rel, "ok": rel <= rtol}


class _KernelQuadrature:
    """sum_sigma weight(sigma) K(sigma) F(t - sigma) evaluated in chunks."""

    def __init__(self, nodes: np.ndarray, kw: np.ndarray):
        self.nodes = nodes  # (S, n)
        self.kw = kw  # (S,) or (S, m, m)

    def apply(self, F: EvalFunction, p: np.ndarray) -> np.ndarray:
        S, n = self.nodes.shape
        N = p.shape[0]
        per = max(1, EVAL_CHUNK // max(S, 1))
        out = np.zeros((N, F.m if self.kw.ndim == 1 else self.kw.shape[1]), dtype=complex)
        for k in range(0, N, per):
            pk = p[k:k + per]
            shifted = (pk[:, None, :] - self.nodes[None, :, :]).reshape(-1, n)
            vals = F.raw(shifted).reshape(pk.shape[0], S, F.m)
            if self.kw.ndim == 1:
                out[k:k + per] = pairwise_sum(vals * self.kw[None, :, None], axis=1)
            else:
                prod = np.einsum("sij,psj->psi", self.kw, vals)
                out[k:k + per] = pairwise_sum(prod, axis=1)
        return out


def convolve(h: EvalFunction, F: EvalFunction, params: ParameterSet | None = None, radius: float = 10.0,
             spacing: float | None = None, check_tail: bool = True) -> EvalFunction:
    """(h * F)(t) = int h(sigma) F(t - sigma) d sigma over |sigma|_inf <= radius.

    With ``params`` the returned closure is parameterised like F (the
    trailing inputs are passed through unchanged).
    """
    if h.m != 1:
        raise DimensionError("the kernel must be scalar")
    n = h.n
    if F.n != n + (params.dim if params else 0):
        raise DimensionError("kernel and function dimensions differ")
    if check_tail:
        chk = tail_check(h, radius, spacing)
        if not chk["ok"]:
            raise RadiusError(f"kernel mass outside radius {radius} is not negligible "
                              f"(relative change {chk['relative_change']:.2e})")
    grid = _sigma_grid(radius, n, spacing)
    nodes = grid.points()
    kw = h.raw(nodes)[:, 0].astype(complex) * grid.weights()
    quad = _KernelQuadrature(nodes, kw)
    d = F.n - n
    if d == 0:
        fn = lambda p: quad.apply(F, p)
    else:
        def fn(p):
            # the parameter coordinates are not convolved
            out = np.zeros((p.shape[0], F.m), dtype=complex)
            for x in np.unique(p[:, n:], axis=0):
                rows = np.all(p[:, n:] == x, axis=1)
                out[rows] = quad.apply(bind(F, x), p[rows][:, :n])
            return out
    return EvalFunction(fn, F.n, F.m, label=f"({h.label} * {F.label})")


def period_transfer_bound(h: EvalFunction, w: WeightFunction | None, radius: float,
                          spacing: float | None = None) -> float:
    """C = int_{|sigma| <= radius} |h(sigma)| w(sigma) d sigma."""
    return _abs_mass(h, _sigma_grid(radius, h.n, spacing), w)


def heat_kernel(t: float, n: int = 1) -> EvalFunction:
    if t <= 0:
        raise SpecError("heat kernel needs t > 0")
    c = (4 * math.pi * t) ** (-n / 2)
    return EvalFunction(lambda p: c * np.exp(-np.sum(p * p, axis=1) / (4 * t)), n, 1, bounded=BOUNDED,
                        label=f"heat[{t:g}]")


def gauss_semigroup(F: EvalFunction, t: float, spacing: float | None = None) -> EvalFunction:
    """Convolution with the heat kernel (4 pi t)^{-n/2} e^{-|y|^2/4t} truncated at 8 sqrt(t)."""
    radius = 8 * math.sqrt(t)
    if spacing is None:
        spacing = math.sqrt(2 * t) / 10
    G = convolve(heat_kernel(t, F.n), F, radius=radius, spacing=spacing, check_tail=False)
    G.label = f"heat[{t:g}]({F.label})"
    return G


# -- operator families ----------------------------------------------------------------
@dataclass
class OperatorFamily:
    """Strongly continuous family t -> R(t) of m x m matrices on (0, inf)^n.

    ``fn`` maps an (K, n) array of times to a (K, m, m) array.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    m: int
    n: int = 1
    label: str = "R"
    tail_exponent: float | None = None

    @classmethod
    def diagonal(cls, entries: list, n: int = 1, label: str | None = None) -> "OperatorFamily":
        """Diagonal family from scalar EvalFunctions of s."""
        m = len(entries)

        def fn(s):
            out = np.zeros((s.shape[0], m, m), dtype=complex)
            for j, e in enumerate(entries):
                out[:, j, j] = e.raw(s)[:, 0]
            return out

        return cls(fn, m, n, label or "diag[" + ", ".join(e.label for e in entries) + "]")

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float).reshape(-1, self.n)
        return np.asarray(self.fn(s), dtype=complex).reshape(s.shape[0], self.m, self.m)

    def norms(self, s) -> np.ndarray:
        return np.linalg.norm(self(s), ord=2, axis=(1, 2))

    def check_continuity(self, samples: int = 16, delta: float = 1e-7, t_max: float = 10.0) -> float:
        """Largest finite-difference jump |R(t + delta) - R(t)| at ``samples`` times in (0, t_max]."""
        ts = np.linspace(t_max / samples, t_max, samples)
        pts = np.repeat(ts[:, None], self.n, axis=1)
        return float(np.max(np.linalg.norm(self(pts + delta) - self(pts), ord=2, axis=(1, 2))))

    def mass(self, Thist: float, spacing: float, w: WeightFunction | None = None) -> float:
        grid = QuadratureGrid.uniform(DomainBox((0.0,) * self.n, (Thist,) * self.n), spacing=spacing)
        pts = grid.points()
        a = self.norms(pts)
        if w is not None:
            a = a * w.values(pts)
        return float(pairwise_sum(a * grid.weights()))


def conv_product(R: OperatorFamily, f: EvalFunction, Thist: float, spacing: float = 0.01,
                 check_tail: bool = True) -> EvalFunction:
    """F(t) = int_{[0, Thist]^n} R(s) f(t - s) ds, the truncated infinite convolution product."""
    if R.n > 2:
        raise SpecError("convolution products are implemented for n <= 2")
    if f.n != R.n or f.m != R.m:
        raise DimensionError("family and function dimensions differ")
    if check_tail:
        inner, outer = R.mass(Thist, spacing), R.mass(2 * Thist, spacing)
        if outer > 0 and abs(outer - inner) > TAIL_RTOL * outer:
            raise RadiusError(f"tail of |R| beyond {Thist} is not negligible "
                              f"(relative {abs(outer - inner) / outer:.2e})")
    grid = QuadratureGrid.uniform(DomainBox((0.0,) * R.n, (Thist,) * R.n), spacing=spacing)
    nodes = grid.points()
    kw = R(nodes) * grid.weights()[:, None, None]
    quad = _KernelQuadrature(nodes, kw)
    return EvalFunction(lambda p: quad.apply(f, p), f.n, R.m, label=f"({R.label} conv {f.label})")


# -- superposition ----------------------------------------------------------------
def nemytskii(G, F: EvalFunction, params: ParameterSet | None = None) -> EvalFunction:
    """W(t) = G(t, F(t)).

    ``G`` is either an expression (see ``exprdsl.parse`` with names for t and
    y), evaluated at complex inputs, or an EvalFunction of n + m real inputs,
    in which case F must be real valued.
    """
    from .exprdsl import Expr, eval_values

    n, m = F.n, F.m
    if isinstance(G, Expr):
        if G.n != n + m:
            raise DimensionError(f"G takes {G.n} inputs, expected {n + m}")
        fn = lambda p: eval_values(G, np.hstack([p.astype(complex), F.raw(p).astype(complex)]))
        gm, label = G.m, str(G)
    else:
        if G.n != n + m:
            raise DimensionError(f"G takes {G.n} inputs, expected {n + m}")

        def fn(p):
            v = F.raw(p)
            if np.iscomplexobj(v):
                if np.any(v.imag != 0):
                    raise DomainError("real-input G needs a real-valued F", p[np.argmax(np.any(v.imag != 0, axis=1))])
                v = v.real
            return G.raw(np.hstack([p, v]))

        gm, label = G.m, G.label
    return EvalFunction(fn, n, gm, F.domain, label=f"{label}∘{F.label}")
