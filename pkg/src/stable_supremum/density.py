"""Density, CDF and quantiles of the supremum S_1.

Two power series in x describe the law of S_1.

* ``small`` side: ``x^(alpha rho - 1) * sum a_{m,n} x^(m + alpha n)``
* ``large`` side: ``x^(-1 - alpha) * sum b_{m,n+1} x^-(m + alpha n)``

For alpha in (1,2) the small-side series converges for every x > 0 and the
large-side one is only asymptotic as x -> infinity.  For alpha in (0,1) the
roles swap.  Terms are grouped into unit shells of the exponent u and summed
shell by shell.  A convergent sum stops once two consecutive shells fall
below the tolerance.  An asymptotic sum is cut just before the smallest shell
(optimal truncation), and its error is reported as that shell's size.

At large arguments the convergent series passes through terms many orders
larger than the result.  When the digits lost this way exceed what doubles
can afford, the sum is redone in MPFR at a precision chosen from the
observed peak.

All ``est_error`` values are relative to ``|value|``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Optional

import gmpy2
import numpy as np

from .coefficients import T_MAX, StableParams, build_table, extended_table
from .errors import DomainError, HypothesisError, SupremumError
from .sigloc import digits_to_bits, mp_context

__all__ = [
    "SeriesResult",
    "MassResult",
    "density",
    "cdf",
    "survival",
    "quantile",
    "total_mass",
    "sup_density_t",
    "series_sum",
    "EPS_MIN",
    "EPS_MAX",
]

EPS_MIN, EPS_MAX = 1e-14, 1e-2
RATIO_CAP = 0.9
# digits doubles can spend on cancellation: coefficients carry ~13 good digits
DOUBLE_BUDGET = 13.0
GUARD_DIGITS = 5
# relative accuracy of a double-tier sum whose peak term equals the result
ROUNDING_DIGITS = 15.0
MAX_DIGITS = 3000
_LN10 = math.log(10.0)

CONVERGED = "Converged"
NOT_CONVERGED = "NotConverged"
FLOOR = "AsymptoticFloor"


@dataclass(frozen=True)
class SeriesResult:
    value: float
    mode: str  # "convergent" or "asymptotic"
    T_used: float
    terms_used: int
    est_error: float  # relative
    status: str
    peak_log10_term: float
    side: str = "small"
    digits: Optional[int] = None  # working precision when the MPFR path ran

    @property
    def abs_error(self) -> float:
        return self.est_error * abs(self.value)

    def as_dict(self):
        return {
            "value": self.value,
            "mode": self.mode,
            "T_used": self.T_used,
            "terms_used": self.terms_used,
            "est_error": self.est_error,
            "status": self.status,
            "peak_log10_term": self.peak_log10_term,
            "side": self.side,
            "digits": self.digits,
        }


def _check_eps(eps: float):
    if not (EPS_MIN <= eps <= EPS_MAX):
        raise DomainError(f"eps_rel must lie in [{EPS_MIN:g}, {EPS_MAX:g}], got {eps!r}")


def _check_x(x: float):
    if not (isinstance(x, (int, float, np.floating)) and math.isfinite(x) and x > 0):
        raise DomainError(f"x must be a finite positive real, got {x!r}")


class _Lin(tuple):
    """``c_ar * alpha*rho + c_a * alpha + c_1``, evaluated in either tier."""

    def __new__(cls, c_ar=0, c_a=0, c_1=0):
        return super().__new__(cls, (c_ar, c_a, c_1))

    def value(self, ar, a):
        c_ar, c_a, c_1 = self
        return c_ar * ar + c_a * a + c_1


def _form(params: StableParams, side: str, quantity: str):
    """(table kind, sigma, prefactor exponent, weight shift or None).

    A term is ``coef * x^(e0 + sigma*u) / (shift + u)``.  For ``integral`` the
    small side gives P(S <= x) and the large side gives P(S > x).
    """
    if side == "small":
        if quantity == "density":
            return "a", 1, _Lin(1, 0, -1), None
        return "a", 1, _Lin(1, 0, 0), _Lin(1, 0, 0)
    if quantity == "density":
        return "b", -1, _Lin(0, -1, -1), None
    return "b", -1, _Lin(0, -1, 0), _Lin(0, 1, 0)


def _float_consts(params):
    return params.alpha * params.rho, params.alpha


def convergent_side(params: StableParams) -> str:
    return "small" if params.regime == "upper" else "large"


def _other(side: str) -> str:
    return "large" if side == "small" else "small"


# -- double-precision shell sums ---------------------------------------------

def _shell_starts(table):
    cached = table.__dict__.get("_starts")
    if cached is None:
        sh = table.shell
        starts = np.flatnonzero(np.r_[True, sh[1:] != sh[:-1]])
        cached = (starts, sh[starts])
        object.__setattr__(table, "_starts", cached)
    return cached


def _log_terms(table, x, e0, sigma, shift):
    ar, a = _float_consts(table.params)
    e0 = e0.value(ar, a)
    shift = None if shift is None else shift.value(ar, a)
    lnx = math.log(x)
    L = table.logabs + (e0 + sigma * table.u) * lnx
    if shift is not None:
        L = L - np.log(shift + table.u)
    return np.where(table.sign == 0, -np.inf, L)


def _stop_scan(a, P, eps):
    """First shell index k >= 1 passing the two-shell rule, else None; plus est array."""
    with np.errstate(divide="ignore", invalid="ignore"):
        small = a < eps * P
        ratio = np.where(a[:-1] > 0, a[1:] / a[:-1], np.inf)
        r = np.minimum(ratio, RATIO_CAP)
        est = a[1:] / (1.0 - r)
        ok = small[1:] & small[:-1] & (est <= eps * P[1:])
    hits = np.flatnonzero(ok)
    est_full = np.r_[a[0], est]
    return (int(hits[0]) + 1 if hits.size else None), est_full


def _float_convergent(table, x, e0, sigma, shift, eps):
    L = _log_terms(table, x, e0, sigma, shift)
    starts, shells = _shell_starts(table)
    env = np.maximum.reduceat(L, starts)
    Lmax = float(np.max(env))
    vals = table.sign * np.exp(L - Lmax)
    sums = np.add.reduceat(vals, starts)
    partial = np.cumsum(sums)
    k, est = _stop_scan(np.abs(sums), np.abs(partial), eps)
    status = CONVERGED
    if k is None:
        k, status = len(sums) - 1, NOT_CONVERGED
    total = partial[k]
    peak = float(np.max(env[: k + 1]))
    if total == 0.0:
        log_total = -math.inf
        rel = math.inf
    else:
        log_total = math.log(abs(total)) + Lmax
        rel = float(est[k] / abs(total))
    if total == 0.0:
        value = 0.0
    elif log_total < 709.0:
        value = math.copysign(math.exp(log_total), total)
    else:
        # a diverging partial sum past the double range; only NotConverged gets here
        value = math.copysign(sys.float_info.max, total)
    terms = int(starts[k + 1]) if k + 1 < len(starts) else len(table)
    excess = (peak - log_total) / _LN10 if math.isfinite(log_total) else math.inf
    return dict(value=value, rel=rel, T=float(shells[k]), terms=terms, status=status,
                peak=peak / _LN10, excess=excess)


def _float_asymptotic(table, x, e0, sigma, shift, eps):
    L = _log_terms(table, x, e0, sigma, shift)
    starts, shells = _shell_starts(table)
    env = np.maximum.reduceat(L, starts)
    if len(env) < 2:
        kstar = len(env)
    else:
        kstar = int(np.argmin(env[1:])) + 1
    stop = int(starts[kstar]) if kstar < len(starts) else len(table)
    Lk = L[:stop]
    Lmax = float(np.max(Lk))
    total = float(np.sum(table.sign[:stop] * np.exp(Lk - Lmax)))
    floor_log = float(env[kstar]) if kstar < len(env) else -math.inf
    if total == 0.0:
        value, rel = 0.0, math.inf
    else:
        log_total = math.log(abs(total)) + Lmax
        value = math.copysign(math.exp(log_total), total)
        rel = math.exp(floor_log - log_total) if math.isfinite(floor_log) else 0.0
        # rounding: digits lost to cancellation among the retained terms
        rel = max(rel, 10.0 ** ((Lmax - log_total) / _LN10 - ROUNDING_DIGITS))
    status = CONVERGED if rel <= eps else FLOOR
    T_used = float(shells[kstar - 1])
    return dict(value=value, rel=rel, T=T_used, terms=stop, status=status, peak=Lmax / _LN10, excess=0.0)


# -- MPFR shell sums ---------------------------------------------------------

def _mp_convergent(params, kind, x, e0, sigma, shift, eps, digits):
    bits = digits_to_bits(digits)
    ext = extended_table(params, kind, T_MAX, bits)
    table = ext.base
    off = 0 if kind == "a" else 1
    m_arr, n_arr, sh_arr = table.m.tolist(), table.n.tolist(), table.shell.tolist()
    with mp_context(bits):
        X = gmpy2.mpfr(x)
        alpha = gmpy2.mpfr(params.alpha_spec.to_mpfr(bits + 32))
        base_m = X if sigma > 0 else 1 / X
        base_n = X**alpha if sigma > 0 else 1 / X**alpha
        pow_m = [gmpy2.mpfr(1)]
        for _ in range(max(m_arr)):
            pow_m.append(pow_m[-1] * base_m)
        pow_n = [gmpy2.mpfr(1)]
        for _ in range(max(n_arr)):
            pow_n.append(pow_n[-1] * base_n)
        rho = gmpy2.mpfr(gmpy2.mpq(params.rho_exact.numerator, params.rho_exact.denominator))
        pref = X ** e0.value(alpha * rho, alpha)
        w_shift = None if shift is None else shift.value(alpha * rho, alpha)
        eps_mp = gmpy2.mpfr(eps)
        partial = gmpy2.mpfr(0)
        prev_abs = None
        prev_small = False
        peak = gmpy2.mpfr(0)
        shell_sum = gmpy2.mpfr(0)
        cur = sh_arr[0]
        status, T_used, terms, est_abs = NOT_CONVERGED, float(sh_arr[-1]), len(m_arr), None
        for i in range(len(m_arr) + 1):
            if i == len(m_arr) or sh_arr[i] != cur:
                partial += shell_sum
                a_abs = abs(shell_sum)
                small = a_abs < eps_mp * abs(partial)
                if prev_abs is not None:
                    r = a_abs / prev_abs if prev_abs > 0 else gmpy2.mpfr("inf")
                    r = min(r, gmpy2.mpfr(RATIO_CAP))
                    est_abs = a_abs / (1 - r)
                    if small and prev_small and est_abs <= eps_mp * abs(partial):
                        status, T_used, terms = CONVERGED, float(cur), i
                        break
                else:
                    est_abs = a_abs
                prev_abs, prev_small = a_abs, small
                if i == len(m_arr):
                    break
                shell_sum = gmpy2.mpfr(0)
                cur = sh_arr[i]
            mi, ni = m_arr[i], n_arr[i]
            c = ext.values[i]
            if c == 0:
                continue
            t = c * pow_m[mi] * pow_n[ni - off]
            if w_shift is not None:
                t = t / (w_shift + mi + alpha * (ni - off))
            t = t * pref
            at = abs(t)
            if at > peak:
                peak = at
            shell_sum += t
        if partial == 0:
            return dict(value=0.0, rel=math.inf, T=T_used, terms=terms, status=status,
                        peak=float(gmpy2.log10(peak)) if peak > 0 else -math.inf, excess=math.inf, digits=digits)
        excess = float(gmpy2.log10(peak) - gmpy2.log10(abs(partial)))
        return dict(value=float(partial), rel=float(est_abs / abs(partial)), T=T_used, terms=terms,
                    status=status, peak=float(gmpy2.log10(peak)), excess=excess, digits=digits)


# -- public evaluation -------------------------------------------------------

def series_sum(params: StableParams, x: float, side: str, quantity: str, mode: str, eps: float) -> SeriesResult:
    """One side's series at x, summed as a convergent or as an asymptotic series."""
    kind, sigma, e0, shift = _form(params, side, quantity)
    table = build_table(params, kind, T_MAX)
    if mode == "asymptotic":
        r = _float_asymptotic(table, x, e0, sigma, shift, eps)
        return SeriesResult(r["value"], "asymptotic", r["T"], r["terms"], r["rel"], r["status"], r["peak"], side)
    r = _float_convergent(table, x, e0, sigma, shift, eps)
    digits = None
    if r["excess"] > DOUBLE_BUDGET + math.log10(eps):
        need = max(34, int(math.ceil(r["excess"] if math.isfinite(r["excess"]) else 60)) + 15 + GUARD_DIGITS)
        for _ in range(4):
            if need > MAX_DIGITS:
                raise SupremumError(f"cancellation needs more than {MAX_DIGITS} digits at x={x!r}")
            r = _mp_convergent(params, kind, x, e0, sigma, shift, eps, need)
            digits = need
            lost = r["excess"] if math.isfinite(r["excess"]) else need
            if lost + (-math.log10(eps)) + GUARD_DIGITS <= need:
                break
            need = int(math.ceil(lost)) + 15 + GUARD_DIGITS + int(-math.log10(eps))
    return SeriesResult(r["value"], "convergent", r["T"], r["terms"], r["rel"], r["status"], r["peak"], side, digits)


def _best_asymptotic(params, x, quantity, eps, side="auto"):
    if side != "auto":
        return series_sum(params, x, side, quantity, "asymptotic", eps)
    res = [series_sum(params, x, s, quantity, "asymptotic", eps) for s in ("small", "large")]
    return min(res, key=lambda r: r.est_error)


def _evaluate(params: StableParams, x: float, quantity: str, eps: float, mode: str, side: str):
    _check_x(x)
    _check_eps(eps)
    if mode not in ("auto", "convergent", "asymptotic"):
        raise DomainError(f"mode must be auto, convergent or asymptotic, got {mode!r}")
    witnessed = params.alpha_class.verdict == "InL-witnessed"
    conv_side = convergent_side(params)
    if mode == "convergent":
        if witnessed:
            raise HypothesisError(
                f"alpha {params.alpha_spec} is witnessed in L; the convergent series carries no guarantee there")
        return series_sum(params, x, conv_side, quantity, "convergent", eps)
    if mode == "asymptotic":
        return _best_asymptotic(params, x, quantity, eps, side)
    # auto: the cheap expansion wherever it already meets the tolerance
    asym = series_sum(params, x, _other(conv_side), quantity, "asymptotic", eps)
    if asym.status == CONVERGED or witnessed:
        return asym if not witnessed else _best_asymptotic(params, x, quantity, eps)
    conv = series_sum(params, x, conv_side, quantity, "convergent", eps)
    if conv.status == CONVERGED or conv.est_error <= asym.est_error:
        return conv
    return asym


def density(params: StableParams, x: float, eps_rel: float = 1e-10, mode: str = "auto", side: str = "auto") -> SeriesResult:
    """p(x) for S_1 (``side`` only matters in asymptotic mode)."""
    return _evaluate(params, x, "density", eps_rel, mode, side)


def _to_cdf(r: SeriesResult) -> SeriesResult:
    if r.side == "small":
        return r
    value = 1.0 - r.value
    rel = r.est_error * abs(r.value) / abs(value) if value != 0 else math.inf
    return SeriesResult(value, r.mode, r.T_used, r.terms_used, rel, r.status, r.peak_log10_term, r.side, r.digits)


def cdf(params: StableParams, x: float, eps_rel: float = 1e-10, mode: str = "auto", side: str = "auto") -> SeriesResult:
    """P(S_1 <= x) by term-wise integration of the series."""
    return _to_cdf(_evaluate(params, x, "integral", eps_rel, mode, side))


def survival(params: StableParams, x: float, eps_rel: float = 1e-10, mode: str = "auto", side: str = "auto") -> SeriesResult:
    """P(S_1 > x); accurate in the far tail where 1 - cdf would cancel."""
    r = _evaluate(params, x, "integral", eps_rel, mode, side)
    if r.side == "large":
        return r
    value = 1.0 - r.value
    rel = r.est_error * abs(r.value) / abs(value) if value != 0 else math.inf
    return SeriesResult(value, r.mode, r.T_used, r.terms_used, rel, r.status, r.peak_log10_term, r.side, r.digits)


def sup_density_t(params: StableParams, t: float, x: float, eps_rel: float = 1e-10, mode: str = "auto") -> float:
    """Density of S_t at x, from S_t = t^(1/alpha) S_1 in law."""
    if not t > 0:
        raise DomainError("t must be positive")
    c = t ** (-1.0 / params.alpha)
    return c * density(params, c * x, eps_rel, mode).value


@dataclass(frozen=True)
class MassResult:
    value: float
    split: float
    lower_part: SeriesResult  # P(S <= split)
    upper_part: SeriesResult  # P(S > split)

    @property
    def est_error(self) -> float:
        return self.lower_part.abs_error + self.upper_part.abs_error


def total_mass(params: StableParams, eps_rel: float = 1e-10, split: Optional[float] = None) -> MassResult:
    """Integral of p over (0, inf) as P(S <= X) + P(S > X).

    Each piece is the term-wise integral of the series that is accurate on
    its side of X: the convergent one where it converges cheaply and the
    asymptotic one on the far side.  X is searched over a grid unless given.
    """
    _check_eps(eps_rel)
    if split is not None:
        candidates = [split]
    elif params.regime == "upper":
        candidates = [5.0, 4.5, 5.5, 4.0, 6.0, 3.5, 7.0, 3.0, 8.0, 2.5, 10.0, 2.0]
    else:
        candidates = [0.1, 0.12, 0.08, 0.15, 0.06, 0.2, 0.05, 0.3, 0.03, 0.5, 0.02, 1.0]
    best = None
    for X in candidates:
        lo = _integral_piece(params, X, "small", eps_rel)
        hi = _integral_piece(params, X, "large", eps_rel)
        res = MassResult(lo.value + hi.value, X, lo, hi)
        if lo.status == CONVERGED and hi.status == CONVERGED:
            return res
        if best is None or res.est_error < best.est_error:
            best = res
    return best


def _integral_piece(params, X, side, eps):
    conv = convergent_side(params)
    mode = "convergent" if side == conv else "asymptotic"
    if mode == "convergent" and params.alpha_class.verdict == "InL-witnessed":
        raise HypothesisError(f"alpha {params.alpha_spec} is witnessed in L")
    return series_sum(params, X, side, "integral", mode, eps)


def quantile(params: StableParams, u: float, eps: float = 1e-10) -> float:
    """x with P(S_1 <= x) = u, by bisection in log x and a Newton polish."""
    if not (1e-8 < u < 1 - 1e-8):
        raise DomainError("u must lie in (1e-8, 1 - 1e-8)")
    tol = max(eps, 1e-14)
    ceps = min(max(tol * 1e-2, EPS_MIN), 1e-6)

    def F(x):
        return cdf(params, x, ceps).value

    lo, hi = 1e-3, 1e3
    while F(lo) > u:
        lo /= 100.0
        if lo < 1e-300:
            raise SupremumError("quantile bracket failed below")
    while F(hi) < u:
        hi *= 100.0
        if hi > 1e300:
            raise SupremumError("quantile bracket failed above")
    x = math.sqrt(lo * hi)
    for _ in range(200):
        x = math.sqrt(lo * hi)
        fx = F(x)
        if abs(fx - u) <= tol:
            break
        if fx < u:
            lo = x
        else:
            hi = x
        if hi / lo - 1 < 1e-6:
            break
    for _ in range(20):
        fx = F(x)
        err = fx - u
        if abs(err) <= tol * 1e-2:
            break
        p = density(params, x, ceps).value
        if not p > 0:
            break
        step = err / p
        nx = x - step
        if not lo <= nx <= hi:
            nx = 0.5 * (lo + hi)
        if fx < u:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        if nx == x:
            break
        x = nx
    if abs(F(x) - u) > tol:
        raise SupremumError(f"quantile did not reach |F(x) - u| <= {tol:g}")
    return x
