"""Independent checks of the series: Mellin transform and Monte Carlo.

Mellin transform ``M(s) = E[S_1^(s-1)]`` is assembled from three pieces.
Each series is integrated term by term on the side where it is accurate, and
the density is integrated numerically in between:

    alpha in (1,2):  [0, 1] small-side series | [1, 10] Gauss-Legendre | [10, inf) large-side series
    alpha in (0,1):  [0, 0.1] small-side series | [0.1, 1] Gauss-Legendre | [1, inf) large-side series

The term-wise pieces are meromorphic in s, so the same code evaluates the
analytic continuation outside the strip when that is asked for explicitly.

Monte Carlo draws alpha-stable increments with the Chambers-Mallows-Stuck
method.  The positivity parameter is mapped to the usual skewness through

    beta  = tan(pi alpha (rho - 1/2)) / tan(pi alpha / 2)
    scale = cos(pi alpha (rho - 1/2)) ** (1/alpha)

so that ``E exp(i t X_1) = exp(-|t|^alpha exp(i pi alpha (1/2 - rho) sgn t))``.
Each path owns a Philox stream keyed by the seed with the path index in the
counter, which makes serial and parallel runs bit-identical.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import loggamma, roots_legendre

from .coefficients import T_MAX, StableParams, build_table, coeff_a, coeff_b
from .density import RATIO_CAP, cdf as series_cdf, density
from .errors import DomainError, PoleProximityError, StripError
from .sigloc import SignedLogValue

__all__ = [
    "McConfig",
    "McResult",
    "MellinPoint",
    "PoleSpec",
    "mc_supremum_cdf",
    "stable_increments",
    "skewness_bridge",
    "mellin_numeric",
    "mellin_strip",
    "functional_eq_residual",
    "residue_estimate",
    "pole_spec",
]

PROXIMITY = 1e-3
_ROUND = 1e-15


# -- Mellin transform --------------------------------------------------------

@dataclass(frozen=True)
class MellinPoint:
    s: complex
    value: complex
    est_error: float
    continued: bool = False  # True when s lies outside the strip


def mellin_strip(params: StableParams) -> Tuple[float, float]:
    return 1.0 - params.alpha * params.rho, 1.0 + params.alpha


def _in_strip(params, s) -> bool:
    lo, hi = mellin_strip(params)
    return lo < s.real < hi


def _series_piece(params: StableParams, side: str, X: float, s: complex, mode: str, eps: float = 1e-14):
    """Term-wise integral of one side's series: over (0, X) for small, (X, inf) for large.

    Returns (value, absolute error estimate).
    """
    a, ar = params.alpha, params.alpha * params.rho
    kind = "a" if side == "small" else "b"
    table = build_table(params, kind, T_MAX)
    u = table.u
    if side == "small":
        E = (ar - 1 + s) + u
        w = E
    else:
        E = (s - 1 - a) - u
        w = -E
    if np.any(np.abs(w[table.sign != 0]) < 1e-300):
        raise PoleProximityError(f"s={s} sits on a pole of the term-wise integral")
    lnX = math.log(X)
    with np.errstate(divide="ignore"):
        L = table.logabs + E.real * lnX - np.log(np.abs(w))
    L = np.where(table.sign == 0, -np.inf, L)
    phase = E.imag * lnX - np.angle(w)
    sh = table.shell
    starts = np.flatnonzero(np.r_[True, sh[1:] != sh[:-1]])
    env = np.maximum.reduceat(L, starts)
    if mode == "asymptotic":
        kstar = int(np.argmin(env[1:])) + 1
        stop = int(starts[kstar]) if kstar < len(starts) else len(table)
        Lmax = float(np.max(L[:stop]))
        vals = table.sign[:stop] * np.exp(L[:stop] - Lmax + 1j * phase[:stop])
        total = complex(np.sum(vals)) * math.exp(Lmax)
        floor = math.exp(float(env[kstar])) if kstar < len(env) else 0.0
        return total, floor + _ROUND * math.exp(Lmax) * math.sqrt(stop)
    Lmax = float(np.max(env))
    vals = table.sign * np.exp(L - Lmax + 1j * phase)
    sums = np.add.reduceat(vals, starts)
    partial = np.cumsum(sums)
    A, P = np.abs(sums), np.abs(partial)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.minimum(np.where(A[:-1] > 0, A[1:] / A[:-1], np.inf), RATIO_CAP)
        est = A[1:] / (1 - r)
        ok = (A[1:] < eps * P[1:]) & (A[:-1] < eps * P[:-1]) & (est <= eps * P[1:])
    hits = np.flatnonzero(ok)
    k = int(hits[0]) + 1 if hits.size else len(sums) - 1
    scale = math.exp(Lmax)
    tail = float(est[k - 1]) if k >= 1 else float(A[0])
    return complex(partial[k]) * scale, (tail + _ROUND * math.sqrt(starts[min(k + 1, len(starts) - 1)])) * scale


# Gauss-Legendre panels for the middle piece
_PANELS = {
    "upper": [(1.0, 2.0), (2.0, 4.0), (4.0, 7.0), (7.0, 10.0)],
    "lower": [(0.1, 0.2), (0.2, 0.4), (0.4, 0.7), (0.7, 1.0)],
}
_LEVELS = (12, 24, 48)
_DENSITY_CACHE: Dict[StableParams, Dict[float, float]] = {}
QUAD_EPS = 1e-10


def _density_at(params, xs):
    cache = _DENSITY_CACHE.setdefault(params, {})
    out = np.empty(len(xs))
    for i, x in enumerate(xs):
        x = float(x)
        v = cache.get(x)
        if v is None:
            v = cache[x] = density(params, x, QUAD_EPS).value
        out[i] = v
    return out


def _quad_middle(params, s, tol=1e-12):
    panels = _PANELS[params.regime]
    prev = None
    for npts in _LEVELS:
        t, w = roots_legendre(npts)
        total = 0j
        for lo, hi in panels:
            x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
            px = _density_at(params, x)
            total += 0.5 * (hi - lo) * np.sum(w * px * np.exp((s - 1) * np.log(x)))
        if prev is not None and abs(total - prev) <= tol * max(1.0, abs(total)):
            return total, abs(total - prev) + QUAD_EPS * abs(total)
        last_diff = None if prev is None else abs(total - prev)
        prev = total
    return prev, last_diff + QUAD_EPS * abs(prev)


def mellin_numeric(params: StableParams, s: complex, allow_continuation: bool = False) -> MellinPoint:
    """E[S_1^(s-1)] by the hybrid scheme; outside the strip only on request."""
    s = complex(s)
    inside = _in_strip(params, s)
    if not inside and not allow_continuation:
        lo, hi = mellin_strip(params)
        raise StripError(f"Re(s)={s.real:g} outside the strip ({lo:.6g}, {hi:.6g})")
    if params.regime == "upper":
        left, right = 1.0, 10.0
        v0, e0 = _series_piece(params, "small", left, s, "convergent")
        v2, e2 = _series_piece(params, "large", right, s, "asymptotic")
    else:
        left, right = 0.1, 1.0
        v0, e0 = _series_piece(params, "small", left, s, "asymptotic")
        v2, e2 = _series_piece(params, "large", right, s, "convergent")
    v1, e1 = _quad_middle(params, s)
    return MellinPoint(s, v0 + v1 + v2, e0 + e1 + e2, continued=not inside)


def _singular_points(params: StableParams, kmax: int = 40):
    a, ar = params.alpha, params.alpha * params.rho
    pts = []
    for k in range(-kmax, kmax + 1):
        pts += [float(k) if k <= 0 else None, 1 + k * a, k * a, 1 - k * a, 1 - ar + k * a]
    return [p for p in pts if p is not None]


def functional_eq_residual(params: StableParams, s: complex, allow_continuation: bool = False) -> float:
    """Relative mismatch of the first-order functional equation of M.

        M(s) / (G(s) G((1-s)/a)) = -M(s+1) / (G(s+1) G(-s/a)) * sin(pi(1-s)/a) / sin(pi(a rho - 1 + s)/a)
    """
    s = complex(s)
    a, ar = params.alpha, params.alpha * params.rho
    for p in _singular_points(params):
        if abs(s - p) < PROXIMITY:
            raise PoleProximityError(f"s={s} lies within {PROXIMITY:g} of a singular point {p:.6g}")
    if not allow_continuation and not (_in_strip(params, s) and _in_strip(params, s + 1)):
        lo, hi = mellin_strip(params)
        raise StripError(f"s and s+1 must both lie in the strip ({lo:.6g}, {hi:.6g}); "
                         "pass allow_continuation=True to use the term-wise continuation")
    m0 = mellin_numeric(params, s, allow_continuation).value
    m1 = mellin_numeric(params, s + 1, allow_continuation).value
    lhs = m0 * np.exp(-loggamma(s) - loggamma((1 - s) / a))
    ratio = np.sin(np.pi * (1 - s) / a) / np.sin(np.pi * (ar - 1 + s) / a)
    rhs = -m1 * np.exp(-loggamma(s + 1) - loggamma(-s / a)) * ratio
    return float(abs(lhs - rhs) / (abs(lhs) + abs(rhs)))


@dataclass(frozen=True)
class PoleSpec:
    family: str  # "plus" or "minus"
    m: int
    n: int
    location: float
    residue_ref: SignedLogValue


def pole_spec(params: StableParams, family: str, m: int, n: int) -> PoleSpec:
    """Poles s- = 1 - a rho - m - a n (residue a_{m,n}) and s+ = m + a n (residue -b_{m-1,n})."""
    a, ar = params.alpha, params.alpha * params.rho
    if family == "minus":
        return PoleSpec("minus", m, n, 1 - ar - m - a * n, coeff_a(params, m, n))
    if family == "plus":
        if m < 1 or n < 1:
            raise DomainError("plus-family poles need m >= 1 and n >= 1")
        return PoleSpec("plus", m, n, m + a * n, -coeff_b(params, m - 1, n))
    raise DomainError("family must be 'plus' or 'minus'")


def residue_estimate(params: StableParams, pole: Optional[PoleSpec] = None,
                     deltas: Sequence[float] = (0.1, 0.05, 0.025), offset: float = 0.0) -> float:
    """Richardson limit of (s - s0) M(s) as s -> s0 from inside the strip.

    ``offset`` shifts the assumed pole location (a negative control).
    """
    if pole is None:
        pole = pole_spec(params, "minus", 0, 0)
    if pole.family != "minus" or (pole.m, pole.n) != (0, 0):
        raise DomainError("only the leading minus-family pole is reachable from inside the strip")
    s0 = pole.location + offset
    f = [d * mellin_numeric(params, s0 + d).value.real for d in deltas]
    # successive halvings: kill the O(d) and then the O(d^2) term
    r1 = [2 * f[i + 1] - f[i] for i in range(len(f) - 1)]
    if len(r1) == 1:
        return r1[0]
    r2 = [(4 * r1[i + 1] - r1[i]) / 3 for i in range(len(r1) - 1)]
    return r2[-1]


# -- Monte Carlo -------------------------------------------------------------

def skewness_bridge(params: StableParams) -> Tuple[float, float]:
    """(beta, scale) of the standard parametrization matching (alpha, rho)."""
    a, rho = params.alpha, params.rho
    beta = math.tan(math.pi * a * (rho - 0.5)) / math.tan(math.pi * a / 2)
    if abs(beta) > 1 + 1e-12:
        raise DomainError(f"implied skewness {beta:.15g} lies outside [-1, 1]")
    beta = max(-1.0, min(1.0, beta))
    scale = math.cos(math.pi * a * (rho - 0.5)) ** (1.0 / a)
    return beta, scale


def stable_increments(alpha: float, beta: float, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Chambers-Mallows-Stuck transform of V ~ U(-pi/2, pi/2), W ~ Exp(1) (alpha != 1)."""
    t = beta * math.tan(math.pi * alpha / 2)
    B = math.atan(t) / alpha
    S = (1 + t * t) ** (1 / (2 * alpha))
    av = alpha * (v + B)
    return S * np.sin(av) * np.exp(
        -np.log(np.cos(v)) / alpha + (1 - alpha) / alpha * (np.log(np.cos(v - av)) - np.log(w))
    )


@dataclass(frozen=True)
class McConfig:
    paths: int
    steps: int
    seed: int
    grid: Tuple[float, ...]
    workers: int = 1
    block: int = 256

    def __post_init__(self):
        if self.paths < 1000:
            raise DomainError("paths must be >= 1000")
        if self.steps < 100:
            raise DomainError("steps must be >= 100")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not self.grid:
            raise DomainError("grid must be non-empty")
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))


@dataclass(frozen=True)
class McResult:
    grid: np.ndarray
    F_emp: np.ndarray
    stderr: np.ndarray
    F_series: np.ndarray
    maxima: np.ndarray = field(repr=False)

    @property
    def sup_distance(self) -> float:
        return float(np.max(np.abs(self.F_emp - self.F_series)))

    def dominance_ok(self, k: float = 3.0) -> bool:
        return bool(np.all(self.F_emp >= self.F_series - k * self.stderr))

    def to_csv(self, path_or_file):
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["x", "F_emp", "stderr", "F_series"])
            for row in zip(self.grid.tolist(), self.F_emp.tolist(), self.stderr.tolist(), self.F_series.tolist()):
                w.writerow([repr(v) for v in row])
        finally:
            if own:
                fh.close()


def _path_generator(seed: int, path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=path << 128))


def _maxima_range(alpha, beta, scale, steps, seed, start, stop, block):
    out = np.empty(stop - start)
    factor = scale * steps ** (-1.0 / alpha)
    for b0 in range(start, stop, block):
        b1 = min(b0 + block, stop)
        v = np.empty((b1 - b0, steps))
        w = np.empty((b1 - b0, steps))
        for i, p in enumerate(range(b0, b1)):
            g = _path_generator(seed, p)
            v[i] = g.uniform(-math.pi / 2, math.pi / 2, steps)
            w[i] = g.standard_exponential(steps)
        x = stable_increments(alpha, beta, v, w)
        x *= factor
        np.cumsum(x, axis=1, out=x)
        out[b0 - start : b1 - start] = np.maximum(x.max(axis=1), 0.0)
    return out


def mc_supremum_cdf(params: StableParams, cfg: McConfig, series: bool = True) -> McResult:
    """Empirical CDF of the random-walk maximum on ``cfg.grid``."""
    beta, scale = skewness_bridge(params)
    a = params.alpha
    if cfg.workers > 1:
        bounds = np.linspace(0, cfg.paths, cfg.workers + 1).astype(int)
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_maxima_range, [a] * cfg.workers, [beta] * cfg.workers, [scale] * cfg.workers,
                                  [cfg.steps] * cfg.workers, [cfg.seed] * cfg.workers,
                                  bounds[:-1].tolist(), bounds[1:].tolist(), [cfg.block] * cfg.workers))
        maxima = np.concatenate(parts)
    else:
        maxima = _maxima_range(a, beta, scale, cfg.steps, cfg.seed, 0, cfg.paths, cfg.block)
    grid = np.asarray(cfg.grid)
    srt = np.sort(maxima)
    F = np.searchsorted(srt, grid, side="right") / cfg.paths
    stderr = np.sqrt(np.maximum(F * (1 - F), 1.0 / cfg.paths) / cfg.paths)
    if series:
        Fs = np.array([series_cdf(params, float(x), 1e-10).value for x in grid])
    else:
        Fs = np.full(grid.shape, np.nan)
    return McResult(grid, F, stderr, Fs, maxima)
