"""Bohr-Fourier analysis: means over growing cubes, coefficients and spectra.

The mean of F is approximated by ``(2T)^-n`` times the midpoint-rule
integral over ``[-T, T]^n`` along a T ladder; the change between the last
two rungs is reported as the convergence estimate.  Spectra are read off a
lambda lattice at the largest T, refined by golden-section search and
confirmed at a longer window so that sinc sidelobes do not survive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import SpecError
from .funcspace import DomainBox, EvalFunction, QuadratureGrid, pairwise_sum, sample

DEFAULT_TLADDER = (25.0, 50.0, 100.0)
DEFAULT_DENSITY = 16.0  # quadrature points per unit length
DEFAULT_THRESHOLD = 0.1
CONFIRM_FACTOR = 4.0


@dataclass
class MeanResult:
    value: np.ndarray
    convergence: float
    shift_discrepancy: float | None = None
    by_T: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.value
        yield self.convergence

    def to_dict(self) -> dict:
        return {"value": _cjson(self.value), "convergence": self.convergence,
                "shift_discrepancy": self.shift_discrepancy,
                "by_T": {str(k): _cjson(v) for k, v in self.by_T.items()}}


def _cjson(v) -> list:
    return [[float(np.real(z)), float(np.imag(z))] for z in np.atleast_1d(v)]


def _cube_grid(T: float, n: int, density: float, center=None) -> QuadratureGrid:
    box = DomainBox.cube(T, n, center)
    count = max(2, int(math.ceil(2 * T * density)))
    return QuadratureGrid(box, (count,) * n, "midpoint")


def _cube_mean(F: EvalFunction, T: float, density: float, center=None, phase=None) -> np.ndarray:
    grid = _cube_grid(T, F.n, density, center)
    vals = sample(F, grid).astype(complex)
    if phase is not None:
        vals = vals * np.exp(-1j * (grid.points() @ np.asarray(phase, dtype=float)))[:, None]
    return pairwise_sum(vals * grid.weights()[:, None], axis=0) / grid.box.volume


def _check_ladder(Tladder):
    T = [float(v) for v in Tladder]
    if len(T) < 2 or any(b <= a for a, b in zip(T, T[1:])) or T[0] <= 0:
        raise SpecError("the T ladder must be increasing, positive and have at least two rungs")
    return T


def mean_value(F: EvalFunction, Tladder: Sequence[float] = DEFAULT_TLADDER, density: float = DEFAULT_DENSITY,
               shift=None, _phase=None) -> MeanResult:
    """Mean of F along the ladder; ``shift`` also averages over shift + K_T."""
    T = _check_ladder(Tladder)
    by_T = {t: _cube_mean(F, t, density, phase=_phase) for t in T}
    last, prev = by_T[T[-1]], by_T[T[-2]]
    conv = float(np.max(np.abs(last - prev)))
    disc = None
    if shift is not None:
        s = np.broadcast_to(np.asarray(shift, dtype=float), (F.n,))
        other = _cube_mean(F, T[-1], density, center=s, phase=_phase)
        disc = float(np.max(np.abs(other - last)))
    return MeanResult(last, conv, disc, by_T)


def bohr_coefficient(F: EvalFunction, lam, Tladder: Sequence[float] = DEFAULT_TLADDER,
                     density: float = DEFAULT_DENSITY, shift=None) -> MeanResult:
    """M(e^{-i<lam, t>} F(t))."""
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (F.n,))
    return mean_value(F, Tladder, density, shift, _phase=lam)


@dataclass
class SpectrumHit:
    lam: tuple
    coefficient: np.ndarray
    magnitude: float


@dataclass
class SpectrumEstimate:
    hits: list
    threshold: float
    lattice: dict
    Tladder: list

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "lattice": self.lattice, "Tladder": self.Tladder,
                "hits": [{"lambda": list(h.lam), "coefficient": _cjson(h.coefficient), "magnitude": h.magnitude}
                         for h in self.hits]}

    def csv_rows(self) -> list[list]:
        rows = []
        for h in self.hits:
            for j, c in enumerate(np.atleast_1d(h.coefficient)):
                rows.append([*h.lam, j, float(c.real), float(c.imag), h.magnitude])
        return rows

    def csv_header(self) -> list[str]:
        n = len(self.hits[0].lam) if self.hits else 1
        return [f"lambda{k + 1}" for k in range(n)] + ["component", "re", "im", "magnitude"]


def _lattice_coefficients(F: EvalFunction, axis: np.ndarray, T: float, density: float) -> np.ndarray:
    """|F_lam| on the lattice, shape (L,)*n, using separable phase factors."""
    grid = _cube_grid(T, F.n, density)
    vals = sample(F, grid).astype(complex) * grid.weights()[:, None] / grid.box.volume
    t = grid.axes()[0]
    E = np.exp(-1j * np.outer(axis, t))  # (L, c)
    if F.n == 1:
        coef = E @ vals  # (L, m)
        return np.sqrt(np.sum(np.abs(coef) ** 2, axis=1))
    if F.n == 2:
        c = grid.counts[0]
        mags = np.zeros((axis.size, axis.size))
        for j in range(F.m):
            V = vals[:, j].reshape(c, c)
            mags += np.abs(E @ V @ E.T) ** 2
        return np.sqrt(mags)
    raise SpecError("spectrum scans are implemented for n <= 2")


def _local_maxima(mags: np.ndarray, threshold: float) -> list[tuple]:
    out = []
    if mags.ndim == 1:
        for k in range(mags.size):
            v = mags[k]
            if v < threshold:
                continue
            left = mags[k - 1] if k > 0 else -1
            right = mags[k + 1] if k + 1 < mags.size else -1
            if v >= left and v > right:
                out.append((k,))
        return out
    padded = np.pad(mags, 1, constant_values=-1)
    for i, j in zip(*np.nonzero(mags >= threshold)):
        win = padded[i:i + 3, j:j + 3]
        if mags[i, j] >= win.max():
            out.append((i, j))
    return out


def _magnitude(F, lam, T, density) -> float:
    return float(np.linalg.norm(_cube_mean(F, T, density, phase=lam)))


def _refine(F, lam0: np.ndarray, step: float, T: float, density: float) -> np.ndarray:
    lam = lam0.copy()
    for d in range(lam.size):
        def neg(x, d=d):
            trial = lam.copy()
            trial[d] = x
            return -_magnitude(F, trial, T, density)
        try:
            res = minimize_scalar(neg, bracket=(lam[d] - step, lam[d], lam[d] + step), method="golden",
                                  tol=1e-10, options={"maxiter": 200})
        except ValueError:  # lattice point not bracketed; keep it
            continue
        if abs(res.x - lam0[d]) <= step:
            lam[d] = res.x
    return lam


def spectrum_scan(F: EvalFunction, threshold: float = DEFAULT_THRESHOLD, lam_range: tuple = (-8.0, 8.0),
                  lam_step: float | None = None, Tladder: Sequence[float] = DEFAULT_TLADDER,
                  density: float = DEFAULT_DENSITY) -> SpectrumEstimate:
    """Lattice local maxima with |F_lam| >= threshold, refined and confirmed.

    A hit is kept when its magnitude at ``CONFIRM_FACTOR * T`` still meets the
    threshold (sidelobes decay with T, carriers do not) and no stronger hit
    lies within 2 pi / T of it.
    """
    if threshold <= 0:
        raise SpecError("threshold must be positive")
    T = _check_ladder(Tladder)
    Tmax = T[-1]
    if lam_step is None:
        lam_step = 0.01 if F.n == 1 else 0.05
    lo, hi = lam_range
    axis = lo + lam_step * np.arange(int(round((hi - lo) / lam_step)) + 1)
    T_scan = Tmax if F.n == 1 else min(Tmax, 25.0)
    mags = _lattice_coefficients(F, axis, T_scan, density)
    cands = []
    T_conf = CONFIRM_FACTOR * T_scan if F.n == 1 else 2 * T_scan
    for idx in _local_maxima(mags, threshold):
        lam = _refine(F, axis[list(idx)], lam_step, T_scan, density)
        lam = _refine(F, lam, 0.5 * math.pi / T_conf, T_conf, density)
        mag_conf = _magnitude(F, lam, T_conf, density)
        if mag_conf >= threshold:
            cands.append((mag_conf, lam))
    cands.sort(key=lambda c: -c[0])
    kept = []
    sep = 2 * math.pi / T_scan
    for mag, lam in cands:
        if all(np.max(np.abs(lam - k[1])) > sep for k in kept):
            kept.append((mag, lam))
    kept.sort(key=lambda c: tuple(c[1]))
    hits = []
    for mag, lam in kept:
        coef = _cube_mean(F, T_conf, density, phase=lam)
        hits.append(SpectrumHit(tuple(float(v) for v in lam), coef, float(np.linalg.norm(coef))))
    return SpectrumEstimate(hits, threshold, {"range": list(lam_range), "step": lam_step, "T_scan": T_scan,
                                              "T_confirm": T_conf}, T)


def trig_poly(spectrum: SpectrumEstimate | Sequence, budget: int | None = None) -> EvalFunction:
    """Sum of F_lam e^{i<lam, t>} over the (largest ``budget``) hits."""
    hits = spectrum.hits if isinstance(spectrum, SpectrumEstimate) else list(spectrum)
    if not hits:
        raise SpecError("empty spectrum")
    if budget is not None:
        hits = sorted(hits, key=lambda h: -h.magnitude)[:budget]
    lams = np.array([h.lam for h in hits], dtype=float)  # (K, n)
    coefs = np.array([np.atleast_1d(h.coefficient) for h in hits], dtype=complex)  # (K, m)
    n, m = lams.shape[1], coefs.shape[1]

    def fn(p):
        return np.exp(1j * (p @ lams.T)) @ coefs

    return EvalFunction(fn, n, m, label=f"trig_poly[{len(hits)}]")


def strong_ap_defect(F: EvalFunction, M, budget: int, Tladder: Sequence[float] = DEFAULT_TLADDER,
                     spectrum: SpectrumEstimate | None = None, box: DomainBox | None = None, **scan_kw) -> float:
    """d_M(F, P) with P the trigonometric polynomial of the ``budget`` largest hits."""
    if budget < 1:
        raise SpecError("budget must be at least 1")
    spectrum = spectrum or spectrum_scan(F, Tladder=Tladder, **scan_kw)
    if not spectrum.hits:
        return M.norm(F, box)
    return M.distance(F, trig_poly(spectrum, budget), box)
