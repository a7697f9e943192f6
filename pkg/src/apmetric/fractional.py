"""Fractional resolvent kernels and the mild-solution fixed-point solver.

For a diagonal operator A = diag(mu_j) with mu_j < 0 the resolvent family of
the fractional problem is diagonal with entries

    r_gamma(t; mu) = t^(gamma-1) E_{gamma,gamma}(mu t^gamma)
                   = t^(gamma-1) gamma int_0^inf s Phi_gamma(s) e^(mu s t^gamma) ds,

where Phi_gamma is the Wright (Mainardi) function.  Both routes are
implemented independently and cross-checked in the tests.

The solver discretises (Lambda u)(t) = int_{-inf}^t R(t - s) f(s, u(s)) ds
on a uniform grid by product integration against hat functions, with a
geometrically graded mesh resolving the t^(gamma-1) singularity.  History
before the window start is taken as zero; the solution is reported only
where the truncated history lies inside the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy import integrate, signal, special

from .errors import ContractionError, DimensionError, MaxIterError, RangeError, SpecError
from .funcspace import DomainBox, EvalFunction, WeightFunction

MAX_TERMS = 10_000
GL_NODES = 200
SERIES_Z = -5.0
GRADED_LEVELS = 24
THIST_CAP = 1e3
TAIL_RTOL = 1e-4


# -- special functions -------------------------------------------------------------
def _series_scale(gamma: float, z: float) -> float:
    """log10 of the largest term of the Wright series at z (cancellation estimate)."""
    best = 0.0
    for k in range(1, MAX_TERMS):
        g = 1 - gamma - gamma * k
        lg = special.gammaln(g) if g > 0 or g != math.floor(g) else math.inf
        if not math.isfinite(lg):
            continue
        v = (k * math.log(z) - special.gammaln(k + 1) - lg) / math.log(10)
        best = max(best, v)
        if k > 10 and v < best - 20:
            break
    return best


def wright(gamma: float, z: float, tol: float = 1e-16) -> float:
    """Phi_gamma(z) = sum_k (-z)^k / (k! Gamma(1 - gamma - gamma k)), z >= 0.

    Summed in double precision when the terms stay small, otherwise with
    mpmath at a working precision covering the cancellation.
    """
    if not 0 < gamma < 1:
        raise RangeError("Wright order must lie in (0, 1)")
    if z < 0:
        raise RangeError("Wright function evaluated for z >= 0 only")
    if z == 0:
        return float(special.rgamma(1 - gamma))
    scale = _series_scale(gamma, z)
    if scale < 2:
        total = 0.0
        logz = math.log(z)
        for k in range(MAX_TERMS):
            logmag = k * logz - special.gammaln(k + 1)
            g = 1 - gamma - gamma * k
            if not (g <= 0 and g == math.floor(g)):  # 1/Gamma vanishes at poles
                total += (-1) ** k * special.gammasgn(g) * math.exp(logmag - special.gammaln(g))
            # |1/Gamma(1 - gamma - gamma k)| grows, so bound it by Gamma(gamma k + gamma)
            if k > 2 and logmag + special.gammaln(gamma * k + gamma) < math.log(tol * 1e-3):
                return total
        raise RangeError(f"Wright series did not converge at z={z}")
    with mpmath.workdps(int(30 + scale)):
        zz = mpmath.mpf(z)
        g = mpmath.mpf(gamma)
        total = mpmath.mpf(0)
        term = mpmath.mpf(1)  # z^k / k!
        for k in range(MAX_TERMS):
            if k:
                term = term * zz / k
            total += (-1) ** k * term * mpmath.rgamma(1 - g - g * k)
            if k > 10 and term * mpmath.gamma(g * k + g) < mpmath.mpf(tol) * mpmath.mpf(10) ** (-3):
                return float(total)
    raise RangeError(f"Wright series did not converge within {MAX_TERMS} terms at z={z}")


def _ml_log10_max_term(alpha: float, beta: float, x: float) -> float:
    if x == 0:
        return 0.0
    ks = np.arange(0, MAX_TERMS)
    v = ks * math.log(x) - special.gammaln(alpha * ks + beta)
    return float(v.max() / math.log(10))


def _ml_integral(alpha: float, beta: float, x: float) -> float:
    """E_{alpha,beta}(-x) for 0 < alpha < 1, 0 < beta <= 1, x > 0 (Laplace-inversion integral)."""
    sb, sba, ca = math.sin(beta * math.pi), math.sin((beta - alpha) * math.pi), math.cos(alpha * math.pi)

    def f(r):
        ra = r ** alpha
        return math.exp(-r) * r ** (alpha - beta) * (ra * sb + x * sba) / (ra * ra + 2 * x * ra * ca + x * x)

    a = integrate.quad(f, 0, 1, limit=400, epsabs=0, epsrel=1e-13)[0]
    b = integrate.quad(f, 1, np.inf, limit=400, epsabs=0, epsrel=1e-13)[0]
    return (a + b) / math.pi


def mittag_leffler(alpha: float, beta: float, z: float) -> float:
    """E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta) for z <= 0.

    The series (in mpmath, precision sized to the largest term) is used for
    z >= -5 when its terms stay below 1e12, and always for alpha = 1; other
    arguments use the integral representation, which needs beta <= 1.
    """
    if not (0 < alpha <= 1) or beta <= 0:
        raise RangeError("need 0 < alpha <= 1 and beta > 0")
    if z > 0:
        raise RangeError("Mittag-Leffler evaluated for z <= 0 only")
    x = -z
    if alpha == 1 and beta == 1:
        return math.exp(z)
    use_series = alpha == 1 or beta > 1 or (z >= SERIES_Z and _ml_log10_max_term(alpha, beta, x) < 12)
    scale = _ml_log10_max_term(alpha, beta, x) if use_series else 0.0
    if use_series:
        if scale > 300:
            raise RangeError(f"series for E_{{{alpha},{beta}}}({z}) needs too much precision")
        with mpmath.workdps(int(30 + scale)):
            zz, a, b = mpmath.mpf(z), mpmath.mpf(alpha), mpmath.mpf(beta)
            total = mpmath.fsum(zz ** k * mpmath.rgamma(a * k + b) for k in range(_ml_terms(alpha, beta, x)))
            return float(total)
    return _ml_integral(alpha, beta, x)


def _ml_terms(alpha: float, beta: float, x: float) -> int:
    if x == 0:
        return 1
    ks = np.arange(0, MAX_TERMS)
    v = ks * math.log(x) - special.gammaln(alpha * ks + beta)
    peak = int(np.argmax(v))
    below = np.nonzero((ks > peak) & (v < v[peak] - 40 * math.log(10) - 1) & (v < math.log(1e-25)))[0]
    if below.size == 0:
        raise RangeError("Mittag-Leffler series needs more than the term cap")
    return int(below[0]) + 1


# -- kernels -----------------------------------------------------------------------
def wright_cutoff(gamma: float) -> float:
    """s beyond which Phi_gamma(s) < e^-45 (from its exp(-B s^(1/(1-gamma))) decay)."""
    B = (1 - gamma) * gamma ** (gamma / (1 - gamma))
    return (45.0 / B) ** (1 - gamma)


@lru_cache(maxsize=64)
def _wright_nodes(gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes s_i on [0, s_max] and weights w_i * s_i * Phi(s_i)."""
    smax = wright_cutoff(gamma)
    x, w = np.polynomial.legendre.leggauss(GL_NODES)
    s = 0.5 * smax * (x + 1)
    phi = np.array([wright(gamma, float(v)) for v in s])
    return s, 0.5 * smax * w * s * phi


def kernel_rgamma(gamma: float, mu: float, t, route: str = "wright") -> np.ndarray:
    """r_gamma(t; mu) for t > 0 by the Wright quadrature or the Mittag-Leffler route."""
    if not 0 < gamma < 1:
        raise RangeError("gamma must lie in (0, 1)")
    if mu >= 0:
        raise RangeError("eigenvalues must be negative")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise RangeError("kernel evaluated for t > 0 only")
    tg = t ** gamma
    if route == "wright":
        s, ws = _wright_nodes(float(gamma))
        flat = tg.reshape(-1)
        vals = np.exp(mu * np.outer(flat, s)) @ ws
        return (t ** (gamma - 1) * gamma * vals.reshape(t.shape))
    if route == "ml":
        flat = (mu * tg).reshape(-1)
        vals = np.array([mittag_leffler(gamma, gamma, z) for z in flat])
        return t ** (gamma - 1) * vals.reshape(t.shape)
    raise SpecError(f"unknown kernel route {route!r}")


def kernel_mass(gamma: float, mu: float, U: float = 1e4) -> float:
    """int_0^inf r_gamma by quadrature in u = t^gamma plus the leading tail term.

    int_0^T r dt = (1/gamma) int_0^{T^gamma} E_{gamma,gamma}(mu u) du, and for
    large u the integrand is about -1/(Gamma(-gamma) mu^2 u^2).
    """
    f = lambda u: mittag_leffler(gamma, gamma, mu * u)
    pts = [0, 1, 10, 100, 1000]
    body = sum(integrate.quad(f, a, b, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
               for a, b in zip(pts, pts[1:] + [U]) if a < U)
    tail = -1.0 / (special.gamma(-gamma) * mu * mu * U)
    return (body + tail) / gamma


@dataclass(frozen=True)
class FractionalKernel:
    gamma: float
    mu: float
    route: str = "wright"

    def __post_init__(self):
        if not 0 < self.gamma < 1 or self.mu >= 0:
            raise RangeError("need 0 < gamma < 1 and mu < 0")

    def __call__(self, t) -> np.ndarray:
        return kernel_rgamma(self.gamma, self.mu, t, self.route)

    @property
    def total_mass(self) -> float:
        return -1.0 / self.mu

    def tail_mass(self, T: float) -> float:
        """int_T^inf r = E_gamma(mu T^gamma) / (-mu)."""
        return mittag_leffler(self.gamma, 1.0, self.mu * T ** self.gamma) / (-self.mu)


# -- the operator and condition (P) --------------------------------------------------------
@dataclass(frozen=True)
class DiagonalOperator:
    eigenvalues: tuple

    def __post_init__(self):
        eig = tuple(float(v) for v in self.eigenvalues)
        if not eig:
            raise SpecError("need at least one eigenvalue")
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def m(self) -> int:
        return len(self.eigenvalues)

    def validate(self):
        if any(mu >= 0 for mu in self.eigenvalues):
            raise RangeError("eigenvalues must be negative")


def check_condition_P(op: DiagonalOperator, c: float, M: float, beta: float, samples: int = 1000) -> float:
    """min over sampled lambda in Psi of M (1 + |lambda|)^-beta - max_j 1/|lambda - mu_j|.

    Psi = {Re lambda >= -c(|Im lambda| + 1)}; samples lie on its boundary, on
    the real axis inside it and on horizontal rays into it.
    """
    if c <= 0 or M <= 0 or not 0 < beta <= 1:
        raise SpecError("need c, M > 0 and beta in (0, 1]")
    mus = np.array(op.eigenvalues)
    inside = mus >= -c * (0 + 1)
    if np.any(inside):
        return -math.inf
    k = max(samples // 4, 8)
    eta = np.concatenate([-np.logspace(-3, 3, k)[::-1], [0.0], np.logspace(-3, 3, k)])
    boundary = -c * (np.abs(eta) + 1) + 1j * eta
    real_axis = -c + np.concatenate([[0.0], np.logspace(-3, 3, k)])
    rays = (boundary[::4, None] + np.logspace(-2, 3, 8)[None, :]).ravel()
    lam = np.concatenate([boundary, real_axis, rays])
    res = np.max(1.0 / np.abs(lam[:, None] - mus[None, :]), axis=1)
    return float(np.min(M * (1 + np.abs(lam)) ** (-beta) - res))


# -- the solver ---------------------------------------------------------------------
def history_length(gamma: float, mu: float) -> float:
    return min((1e4 * gamma / abs(mu)) ** (1 / gamma), THIST_CAP)


def _product_weights(gamma: float, mu: float, h: float, L: int, route: str) -> np.ndarray:
    """W_i = int r(s) hat_i(s) ds for lags i = 0..L (hat_i centred at i h)."""
    x, w = np.polynomial.legendre.leggauss(8)
    r = lambda s: kernel_rgamma(gamma, mu, s, route)
    # cells [k h, (k+1) h], k >= 1, regular
    k = np.arange(1, L)
    a = k * h
    s = a[:, None] + 0.5 * h * (x[None, :] + 1)
    rv = r(s) * (0.5 * h * w)[None, :]
    frac = (s - a[:, None]) / h  # position inside the cell
    I_up = np.sum(rv * frac, axis=1)  # weight going to the right node k+1
    I_down = np.sum(rv * (1 - frac), axis=1)  # to the left node k
    # cell [0, h]: graded mesh towards 0 plus the leading asymptote on [0, h 2^-levels]
    edges = h * 0.5 ** np.arange(GRADED_LEVELS + 1)
    up0 = down0 = 0.0
    for hi, lo in zip(edges[:-1], edges[1:]):
        ss = lo + 0.5 * (hi - lo) * (x + 1)
        rv0 = r(ss) * 0.5 * (hi - lo) * w
        up0 += float(np.sum(rv0 * ss / h))
        down0 += float(np.sum(rv0 * (1 - ss / h)))
    eps = edges[-1]
    lead = eps ** gamma / (gamma * special.gamma(gamma))
    down0 += lead  # s/h is negligible on [0, eps]
    W = np.zeros(L + 1)
    W[0] = down0
    W[1] += up0
    W[1:L] += I_down
    W[2:L + 1] += I_up
    return W


@dataclass
class SolverGrid:
    """Uniform window [a, b] with spacing h; ``report_from`` marks where results are valid."""

    a: float
    b: float
    h: float

    @property
    def t(self) -> np.ndarray:
        n = int(round((self.b - self.a) / self.h))
        return self.a + self.h * np.arange(n + 1)


def _forcing(f, m: int) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Normalise a forcing f(t, u) to a callable on (t: (K,), u: (K, m)) -> (K, m)."""
    from .exprdsl import Expr, eval_values

    if isinstance(f, Expr):
        if f.n != 1 + m or f.m != m:
            raise DimensionError(f"forcing must take (t, u) with {m} state components")
        return lambda t, u: eval_values(f, np.hstack([t[:, None].astype(complex), u]))
    if isinstance(f, EvalFunction):
        if f.n != 1 + m:
            raise DimensionError(f"forcing must take {1 + m} inputs")
        return lambda t, u: f.raw(np.hstack([t[:, None], np.real(u)]))
    return lambda t, u: np.asarray(f(t, u)).reshape(t.shape[0], m)


class LambdaOperator:
    """Discrete Lambda_gamma on a SolverGrid for a diagonal operator."""

    def __init__(self, gamma: float, op: DiagonalOperator, grid: SolverGrid, Thist: float | None = None,
                 route: str = "wright", check_tail: bool = True):
        op.validate()
        self.gamma, self.op, self.grid = gamma, op, grid
        self.Thist = Thist if Thist is not None else max(history_length(gamma, mu) for mu in op.eigenvalues)
        self.tails = [FractionalKernel(gamma, mu).tail_mass(self.Thist) * abs(mu) for mu in op.eigenvalues]
        if check_tail and max(self.tails) > TAIL_RTOL:
            raise RangeError(f"kernel tail beyond Thist={self.Thist:g} is {max(self.tails):.2e} of the mass "
                             f"(> {TAIL_RTOL:g}); history truncation is not justified")
        L = int(round(self.Thist / grid.h))
        if L >= grid.t.size:
            raise RangeError("window shorter than the history length")
        self.L = L
        self.weights = [_product_weights(gamma, mu, grid.h, L, route) for mu in op.eigenvalues]

    @property
    def kernel_sums(self) -> list[float]:
        return [float(np.sum(W)) for W in self.weights]

    def apply_values(self, g: np.ndarray) -> np.ndarray:
        """Discrete convolution of forcing samples g (K, m) with the weights."""
        K = g.shape[0]
        out = np.zeros((K, self.op.m), dtype=complex)
        for j, W in enumerate(self.weights):
            col = g[:, j]
            re = signal.fftconvolve(col.real, W)[:K]
            im = signal.fftconvolve(col.imag, W)[:K] if np.iscomplexobj(col) and np.any(col.imag) else 0.0
            out[:, j] = re + 1j * im
        return out


def _interp_function(t: np.ndarray, vals: np.ndarray, lo: float, hi: float, label: str) -> EvalFunction:
    m = vals.shape[1]

    def fn(p):
        x = p[:, 0]
        return np.stack([np.interp(x, t, vals[:, j].real) + 1j * np.interp(x, t, vals[:, j].imag)
                         for j in range(m)], axis=1)

    return EvalFunction(fn, 1, m, DomainBox.interval(lo, hi), label=label)


def lambda_map(u, f, gamma: float, op: DiagonalOperator, grid: SolverGrid, Thist: float | None = None,
               route: str = "wright", operator: LambdaOperator | None = None) -> EvalFunction:
    """(Lambda u)(t) on the grid, returned as a piecewise-linear closure."""
    lam = operator or LambdaOperator(gamma, op, grid, Thist, route)
    t = grid.t
    uv = u.raw(t[:, None]) if isinstance(u, EvalFunction) else np.asarray(u).reshape(t.size, -1)
    g = _forcing(f, op.m)(t, uv.astype(complex))
    out = lam.apply_values(np.asarray(g, dtype=complex))
    # before a + Thist the missing history makes the values meaningless
    return _interp_function(t, out, grid.a + lam.Thist, grid.b, "Lambda(u)")


@dataclass
class SolveResult:
    solution: EvalFunction
    history: list
    q: float
    ratios: list
    residual: float
    report_from: float
    report_to: float
    Thist: float
    values: np.ndarray = field(repr=False, default=None)
    times: np.ndarray = field(repr=False, default=None)
    kernel_mass: float = 1.0
    report_multiple: float = 3.0
    forcing: Callable | None = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"history": self.history, "q": self.q, "ratios": self.ratios, "residual": self.residual,
                "report_window": [self.report_from, self.report_to], "Thist": self.Thist}


def companion_weight(nu: WeightFunction | None, grid: SolverGrid) -> float:
    """Constant companion w = max nu / min nu over the window (so nu(t) <= nu(t - s) w)."""
    if nu is None:
        return 1.0
    v = nu.values(grid.t[:, None])
    return float(v.max() / v.min())


def contraction_constant(L: float, gamma: float, op: DiagonalOperator, w: float = 1.0) -> float:
    """q = L * w * max_j int r_gamma(.; mu_j) = L w / min_j |mu_j|."""
    return L * w * max(-1.0 / mu for mu in op.eigenvalues)


def solve_fixed_point(f, L: float, gamma: float, op: DiagonalOperator, grid: SolverGrid,
                      nu: WeightFunction | None = None, w: float | None = None, tol: float = 1e-8,
                      max_iter: int = 200, u0: float = 0.0, Thist: float | None = None, route: str = "wright",
                      report_multiple: float = 3.0) -> SolveResult:
    """Iterate u <- Lambda(u) from a constant start until successive iterates are tol-close.

    Distances are nu-weighted sups over the whole window.  The solution is
    reported on [a + report_multiple * Thist, b].
    """
    op.validate()
    w = companion_weight(nu, grid) if w is None else w
    q = contraction_constant(L, gamma, op, w)
    if q >= 1:
        raise ContractionError(f"contraction constant q = {q:.4g} >= 1")
    force = _forcing(f, op.m)
    lipschitz_spot_check(force, L, op.m, grid)
    lam = LambdaOperator(gamma, op, grid, Thist, route)
    t = grid.t
    nuv = np.ones(t.size) if nu is None else nu.values(t[:, None])
    u = np.full((t.size, op.m), u0, dtype=complex)
    history, ratios = [], []
    for _ in range(max_iter):
        new = lam.apply_values(np.asarray(force(t, u), dtype=complex))
        d = float(np.max(np.linalg.norm(new - u, axis=1) * nuv))
        if history and history[-1] > 0:
            ratios.append(d / history[-1])
        history.append(d)
        u = new
        if d <= tol:
            break
    else:
        raise MaxIterError(f"no convergence within {max_iter} iterations (last distance {history[-1]:.3e})")
    nxt = lam.apply_values(np.asarray(force(t, u), dtype=complex))
    residual = float(np.max(np.linalg.norm(nxt - u, axis=1) * nuv))
    lo = grid.a + report_multiple * lam.Thist
    if lo >= grid.b:
        raise RangeError("window too short for the reporting margin")
    sol = _interp_function(t, u, lo, grid.b, "mild solution")
    return SolveResult(sol, history, q, ratios, residual, lo, grid.b, lam.Thist, u, t,
                       max(-1.0 / mu for mu in op.eigenvalues), report_multiple, force)


def lipschitz_spot_check(force, L: float, m: int, grid: SolverGrid, pairs: int = 64, seed: int = 0) -> float:
    """Largest |f(t, u) - f(t, v)| / |u - v| over seeded random pairs; raises if it exceeds L."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(grid.a, grid.b, pairs)
    u = rng.uniform(-2, 2, (pairs, m)).astype(complex)
    v = rng.uniform(-2, 2, (pairs, m)).astype(complex)
    num = np.linalg.norm(np.asarray(force(t, u)) - np.asarray(force(t, v)), axis=1)
    worst = float(np.max(num / np.linalg.norm(u - v, axis=1)))
    if worst > L * (1 + 1e-9) + 1e-12:
        raise ContractionError(f"forcing is not {L:g}-Lipschitz in u (observed ratio {worst:.4g})")
    return worst


def solution_transfer(result: SolveResult, tau: float) -> dict:
    """Compare the solution's tau-defect with the bound implied by the forcing's.

    With D_g = sup |f(t + tau, u(t)) - f(t, u(t))| along the solution and
    K = max_j int r_gamma, the mild-solution identity gives
    D_u <= (K D_g + e) / (1 - q), where e = 2 q^Z sup |u| accounts for the
    zero history Z = report_multiple history lengths back.
    """
    t, u = result.times, result.values
    h = t[1] - t[0]
    k = int(round(tau / h))
    if abs(k * h - tau) > 1e-9 * max(1.0, abs(tau)):
        raise SpecError("tau must be a multiple of the solver spacing")
    inside = (t >= result.report_from) & (t <= result.report_to)
    rows = np.nonzero(inside & (t + tau >= result.report_from) & (t + tau <= result.report_to))[0]
    if rows.size == 0:
        raise RangeError("tau leaves no room inside the reporting window")
    d_u = float(np.max(np.linalg.norm(u[rows + k] - u[rows], axis=1)))
    all_rows = np.arange(max(0, -k), t.size - max(0, k))
    g_shift = np.asarray(result.forcing(t[all_rows] + tau, u[all_rows]))
    g_here = np.asarray(result.forcing(t[all_rows], u[all_rows]))
    d_g = float(np.max(np.linalg.norm(g_shift - g_here, axis=1)))
    e = 2 * result.q ** result.report_multiple * float(np.max(np.linalg.norm(u, axis=1)))
    bound = (result.kernel_mass * d_g + e) / (1 - result.q)
    return {"tau": tau, "solution_defect": d_u, "forcing_defect": d_g, "history_term": e,
            "bound": bound, "holds": d_u <= bound}
