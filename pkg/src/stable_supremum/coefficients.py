"""Double-series coefficients a_{m,n} and b_{m,n}.

    a_{m,n} = (-1)^{m+n} / (Gamma(1-rho-n-m/alpha) Gamma(alpha*rho+m+alpha*n)) * R_m * C_n
    b_{m,n} = (-1)^{m+n} / (Gamma(1+n+m/alpha) Gamma(-m-alpha*n))             * R_m * C_n

with the sine-ratio products

    R_m = prod_{j<=m} sin(pi(rho+(j-1)/alpha)) / sin(pi j/alpha)
    C_n = prod_{j<=n} sin(pi alpha(rho+j-1))   / sin(pi alpha j).

Gamma factors with non-positive arguments go through reflection, and the
sine they need is one of the cached factors:

    sin(pi(1-rho-n-m/alpha)) = (-1)^n sin(pi(rho+m/alpha))
    sin(pi(-m-alpha n))      = -(-1)^m sin(pi alpha n)

Every sine argument is reduced modulo 2 from the exact alpha, so the
near-singular factors that decide conditioning keep their low bits.

Two tiers are produced.  The double tier stores (sign, log|value|) numpy
arrays.  The extended tier stores MPFR values at a requested precision and is
used by the density module when cancellation in a sum calls for it.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

import gmpy2
import numpy as np
from scipy.special import gammaln

from .diophantine import AffineReal, LClassification, RealSpec, classify_L, parse_real
from .errors import DomainError, NearRationalError
from .sigloc import (
    POLE_TOL,
    SignedLogValue,
    log_gamma_signed,
    mp_context,
    mp_from_fraction,
    sinpi_signed,
)

__all__ = [
    "StableParams",
    "CklTag",
    "CoefficientTable",
    "ExtendedTable",
    "ConditionReport",
    "coeff_a",
    "coeff_b",
    "coeff_b_uncancelled",
    "build_table",
    "extended_table",
    "condition_report",
    "detect_ckl",
    "T_MAX",
]

T_MAX = 400.0
DENOM_TOL = 1e-14
RHO_BOUND_TOL = 1e-12
DEFAULT_CLASS_DEPTH = 50
_LNPI = math.log(math.pi)
# |sin(pi y)| below this means y is within POLE_TOL of an integer
_ZERO_LOG = math.log(math.pi * POLE_TOL)
_DENOM_LOG = math.log(math.pi * DENOM_TOL)


@dataclass(frozen=True)
class StableParams:
    """Validated (alpha, rho) in the admissible set.

    ``alpha`` may be a :class:`RealSpec` or any string accepted by
    :func:`parse_real`; a plain float is converted through its shortest repr.
    ``rho`` is stored both as a float and as the exact decimal of that float.
    """

    alpha_spec: RealSpec
    rho: float
    class_depth: int = DEFAULT_CLASS_DEPTH
    alpha_class: LClassification = field(default=None, compare=False, repr=False)

    def __init__(self, alpha: Union[RealSpec, str, float], rho: float, class_depth: int = DEFAULT_CLASS_DEPTH):
        if isinstance(alpha, RealSpec):
            spec = alpha
        elif isinstance(alpha, str):
            spec = parse_real(alpha)
        else:
            spec = RealSpec.decimal(repr(float(alpha)))
        rho = float(rho)
        a = float(spec)
        if not (math.isfinite(a) and math.isfinite(rho)):
            raise DomainError("alpha and rho must be finite")
        if spec.is_exact_rational and spec.value == 1:
            raise DomainError("alpha = 1 is rational and excluded")
        if 0.0 < a < 1.0:
            if not 0.0 < rho < 1.0:
                raise DomainError(f"for alpha in (0,1) rho must lie in (0,1), got {rho}")
        elif 1.0 < a < 2.0:
            lo, hi = 1.0 - 1.0 / a, 1.0 / a
            if not (lo - RHO_BOUND_TOL <= rho <= hi + RHO_BOUND_TOL):
                raise DomainError(f"for alpha={a:.17g} rho must lie in [{lo:.17g}, {hi:.17g}], got {rho}")
        else:
            raise DomainError(f"alpha must lie in (0,1) or (1,2), got {a:.17g}")
        cls_ = classify_L(spec, class_depth, profile_q_max=0)
        if cls_.verdict == "Rational":
            raise DomainError(f"alpha {spec} is rational; both series need an irrational alpha")
        object.__setattr__(self, "alpha_spec", spec)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "class_depth", class_depth)
        object.__setattr__(self, "alpha_class", cls_)

    @property
    def alpha(self) -> float:
        return float(self.alpha_spec)

    @property
    def rho_exact(self) -> Fraction:
        return Fraction(repr(self.rho))

    @property
    def regime(self) -> str:
        """``"upper"`` for alpha in (1,2), ``"lower"`` for alpha in (0,1)."""
        return "upper" if self.alpha > 1 else "lower"

    @property
    def inv_alpha_spec(self) -> RealSpec:
        return self.alpha_spec.reciprocal()

    def __hash__(self):
        return hash((self.alpha_spec, self.rho, self.class_depth))

    def __repr__(self):
        return f"StableParams(alpha={self.alpha_spec}, rho={self.rho!r})"


# -- sine factors ------------------------------------------------------------

class _SineCache:
    """Reduced sine arguments for one parameter pair, extended on demand."""

    def __init__(self, params: StableParams):
        self.params = params
        self.inv = params.inv_alpha_spec
        self.rho = params.rho_exact
        self._lock = threading.Lock()
        # S[m] = sin(pi(rho + m/alpha)), m >= 0; Dr[j] = sin(pi j/alpha), j >= 1
        # Nc[j] = sin(pi alpha(rho + j - 1)), Dc[j] = sin(pi alpha j), j >= 1
        self.S, self.Dr, self.Nc, self.Dc = [], [None], [None], [None]

    def _args(self, which, j):
        if which == "S":
            return AffineReal(self.rho, Fraction(j), self.inv)
        if which == "Dr":
            return AffineReal(Fraction(0), Fraction(j), self.inv)
        if which == "Nc":
            return AffineReal(Fraction(0), self.rho + j - 1, self.params.alpha_spec)
        return AffineReal(Fraction(0), Fraction(j), self.params.alpha_spec)

    def ensure(self, m_max: int, n_max: int):
        with self._lock:
            while len(self.S) <= m_max + 1:
                j = len(self.S)
                self.S.append(self._value("S", j))
            while len(self.Dr) <= m_max:
                j = len(self.Dr)
                self.Dr.append(self._value("Dr", j))
            while len(self.Nc) <= n_max:
                j = len(self.Nc)
                self.Nc.append(self._value("Nc", j))
            while len(self.Dc) <= n_max:
                j = len(self.Dc)
                self.Dc.append(self._value("Dc", j))

    def _value(self, which, j):
        y = self._args(which, j)
        s = sinpi_signed(float(y), y)
        if which in ("Dr", "Dc"):
            if s.sign == 0 or s.logabs < _DENOM_LOG:
                raise NearRationalError(
                    f"sine denominator {'sin(pi j/alpha)' if which == 'Dr' else 'sin(pi alpha j)'} "
                    f"vanishes numerically at j={j}",
                    index=j,
                )
        elif s.sign and s.logabs < _ZERO_LOG:
            s = SignedLogValue(0)
        return s

    def reduced(self, which, j, bits):
        return self._args(which, j).reduce_mod2(bits)

    def row(self, m_max: int):
        """Sign and log of R_m for m = 0..m_max."""
        self.ensure(m_max, 0)
        sign = np.ones(m_max + 1, dtype=np.int8)
        logv = np.zeros(m_max + 1)
        sg, acc = 1, 0.0
        for j in range(1, m_max + 1):
            num, den = self.S[j - 1], self.Dr[j]
            if sg == 0 or num.sign == 0:
                sg = 0
            else:
                sg *= num.sign * den.sign
                acc += num.logabs - den.logabs
            sign[j], logv[j] = sg, acc if sg else 0.0
        return sign, logv

    def col(self, n_max: int):
        """Sign and log of C_n for n = 0..n_max."""
        self.ensure(0, n_max)
        sign = np.ones(n_max + 1, dtype=np.int8)
        logv = np.zeros(n_max + 1)
        sg, acc = 1, 0.0
        for j in range(1, n_max + 1):
            num, den = self.Nc[j], self.Dc[j]
            if sg == 0 or num.sign == 0:
                sg = 0
            else:
                sg *= num.sign * den.sign
                acc += num.logabs - den.logabs
            sign[j], logv[j] = sg, acc if sg else 0.0
        return sign, logv

    def arrays(self, which, upto):
        vals = getattr(self, which)
        sign = np.array([0 if v is None else v.sign for v in vals[: upto + 1]], dtype=np.int8)
        logv = np.array([0.0 if v is None or not v.sign else v.logabs for v in vals[: upto + 1]])
        return sign, logv


_SINES: Dict[StableParams, _SineCache] = {}
_SINES_LOCK = threading.Lock()


def _sines(params: StableParams) -> _SineCache:
    with _SINES_LOCK:
        cache = _SINES.get(params)
        if cache is None:
            cache = _SINES[params] = _SineCache(params)
        return cache


# -- entry formulas (vectorized) ----------------------------------------------

def _entries(params: StableParams, kind: str, m: np.ndarray, n: np.ndarray):
    """Sign (int8) and log|value| arrays for the requested indices."""
    alpha, rho = params.alpha, params.rho
    m_max = int(m.max()) if m.size else 0
    n_max = int(n.max()) if n.size else 0
    sc = _sines(params)
    sc.ensure(m_max, max(n_max, 1))
    rsign, rlog = sc.row(m_max)
    csign, clog = sc.col(n_max)
    parity = np.where((m + n) % 2 == 0, 1, -1).astype(np.int8)
    mf, nf = m.astype(float), n.astype(float)
    if kind == "a":
        # 1/Gamma(z), z = 1 - rho - n - m/alpha, reflected for z < 1/2
        z = 1.0 - rho - nf - mf / alpha
        s_sign, s_log = sc.arrays("S", m_max)
        refl = z < 0.5
        g1_sign = np.where(refl, np.where(n % 2 == 0, 1, -1) * s_sign[m], 1).astype(np.int8)
        with np.errstate(invalid="ignore"):
            g1_log = np.where(refl, s_log[m] + gammaln(np.where(refl, 1.0 - z, 1.0)) - _LNPI, -gammaln(np.where(refl, 1.0, z)))
        g2_log = -gammaln(alpha * rho + mf + alpha * nf)
        sign = parity * g1_sign * rsign[m] * csign[n]
        logv = g1_log + g2_log + rlog[m] + clog[n]
    elif kind == "b":
        if n.size and n.min() < 1:
            raise DomainError("b_{m,n} is defined here for n >= 1")
        d_sign, d_log = sc.arrays("Dc", n_max)
        h1_log = -gammaln(1.0 + nf + mf / alpha)
        # 1/Gamma(-m - alpha n) = sin(pi(-m - alpha n)) Gamma(1 + m + alpha n) / pi
        h2_sign = (-np.where(m % 2 == 0, 1, -1) * d_sign[n]).astype(np.int8)
        h2_log = d_log[n] + gammaln(1.0 + mf + alpha * nf) - _LNPI
        sign = parity * h2_sign * rsign[m] * csign[n]
        logv = h1_log + h2_log + rlog[m] + clog[n]
    else:
        raise DomainError(f"kind must be 'a' or 'b', got {kind!r}")
    sign = sign.astype(np.int8)
    logv = np.where(sign == 0, 0.0, logv)
    return sign, logv


def coeff_a(params: StableParams, m: int, n: int) -> SignedLogValue:
    if m < 0 or n < 0:
        raise DomainError("indices must be non-negative")
    sign, logv = _entries(params, "a", np.array([m]), np.array([n]))
    return SignedLogValue(int(sign[0]), float(logv[0]))


def coeff_b(params: StableParams, m: int, n: int) -> SignedLogValue:
    if m < 0 or n < 1:
        raise DomainError("b_{m,n} needs m >= 0 and n >= 1")
    sign, logv = _entries(params, "b", np.array([m]), np.array([n]))
    return SignedLogValue(int(sign[0]), float(logv[0]))


def coeff_b_uncancelled(params: StableParams, m: int, n: int) -> SignedLogValue:
    """b_{m,n} as the gamma ratio times a_{m,n}; fails where a_{m,n} sits on a pole."""
    alpha, rho = params.alpha, params.rho
    a = coeff_a(params, m, n)
    num = log_gamma_signed(1 - rho - n - m / alpha) * log_gamma_signed(alpha * rho + m + alpha * n)
    den = log_gamma_signed(1 + n + m / alpha) * log_gamma_signed(-m - alpha * n)
    return num / den * a


# -- tables ------------------------------------------------------------------

def _index_set(alpha: float, kind: str, T: float):
    """(m, n, u) with u = m + alpha*n (kind a) or m + alpha*(n-1) (kind b), u <= T."""
    off = 0 if kind == "a" else 1
    ms, ns = [], []
    n = 0
    while alpha * n <= T + 1e-12:
        m_top = int(math.floor(T - alpha * n + 1e-12))
        ms.append(np.arange(m_top + 1))
        ns.append(np.full(m_top + 1, n + off))
        n += 1
    m = np.concatenate(ms).astype(np.int64)
    n = np.concatenate(ns).astype(np.int64)
    u = m + alpha * (n - off)
    order = np.lexsort((m, u))
    return m[order], n[order], u[order]


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Entries with shell exponent ``u <= T``, sorted by ``u``.

    For kind ``a`` the exponent is ``u = m + alpha n``; for kind ``b`` it is
    ``u = m + alpha (n-1)``, matching the power of 1/x the entry multiplies.
    ``shell = ceil(u)`` groups entries into unit shells ``(T-1, T]``.
    """

    params: StableParams
    kind: str
    T: float
    m: np.ndarray
    n: np.ndarray
    u: np.ndarray
    shell: np.ndarray
    sign: np.ndarray
    logabs: np.ndarray
    row_sin: Tuple[np.ndarray, np.ndarray] = field(repr=False)
    col_sin: Tuple[np.ndarray, np.ndarray] = field(repr=False)

    def __len__(self):
        return self.m.size

    @property
    def index(self):
        return set(zip(self.m.tolist(), self.n.tolist()))

    def entry(self, m: int, n: int) -> SignedLogValue:
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = {(a, b): i for i, (a, b) in enumerate(zip(self.m.tolist(), self.n.tolist()))}
            object.__setattr__(self, "_lookup", lookup)
        i = lookup[(m, n)]
        return SignedLogValue(int(self.sign[i]), float(self.logabs[i]))

    def restrict(self, T: float) -> "CoefficientTable":
        if T >= self.T:
            return self
        k = int(np.searchsorted(self.u, T + 1e-12, side="right"))
        rs = self.row_sin
        cs = self.col_sin
        return CoefficientTable(self.params, self.kind, T, self.m[:k], self.n[:k], self.u[:k], self.shell[:k],
                                self.sign[:k], self.logabs[:k], rs, cs)

    def to_csv(self, path_or_file):
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["m", "n", "sign", "log10_abs", "value_if_representable"])
            ln10 = math.log(10.0)
            for m, n, s, l in zip(self.m.tolist(), self.n.tolist(), self.sign.tolist(), self.logabs.tolist()):
                if s == 0:
                    w.writerow([m, n, 0, "-inf", "0.0"])
                    continue
                v = float(SignedLogValue(s, l))
                w.writerow([m, n, s, repr(l / ln10), repr(v) if math.isfinite(v) and v != 0.0 else ""])
        finally:
            if own:
                fh.close()


_TABLES: Dict[Tuple[StableParams, str], CoefficientTable] = {}
_TABLES_LOCK = threading.Lock()


def build_table(params: StableParams, kind: str, T: float = T_MAX) -> CoefficientTable:
    """Double-tier table over the shell region ``u <= T`` (memoized per parameters)."""
    if T < 0:
        raise DomainError("T must be non-negative")
    if kind not in ("a", "b"):
        raise DomainError(f"kind must be 'a' or 'b', got {kind!r}")
    key = (params, kind)
    with _TABLES_LOCK:
        cached = _TABLES.get(key)
    if cached is not None and cached.T >= T:
        return cached.restrict(T)
    m, n, u = _index_set(params.alpha, kind, T)
    sign, logv = _entries(params, kind, m, n)
    sc = _sines(params)
    table = CoefficientTable(
        params, kind, float(T), m, n, u,
        np.ceil(u - 1e-12).astype(np.int64).clip(min=0),
        sign, logv,
        sc.row(int(m.max())), sc.col(int(n.max())),
    )
    with _TABLES_LOCK:
        current = _TABLES.get(key)
        if current is None or current.T < T:
            _TABLES[key] = table
    return table


# -- extended tier -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExtendedTable:
    """MPFR coefficient values aligned with a :class:`CoefficientTable`."""

    base: CoefficientTable
    bits: int
    values: tuple = field(repr=False)


_EXT: Dict[Tuple[StableParams, str], ExtendedTable] = {}
_EXT_LOCK = threading.Lock()


def _mp_sine_products(params: StableParams, m_max: int, n_max: int, bits: int):
    sc = _sines(params)
    sc.ensure(m_max, max(n_max, 1))
    red = bits + 64

    def sin_of(which, j, float_val):
        if float_val.sign == 0:
            return gmpy2.mpfr(0)
        r, _ = sc.reduced(which, j, red)
        return _mp_sin_reduced(r)

    S = [sin_of("S", j, sc.S[j]) for j in range(m_max + 1)]
    Dr = [None] + [sin_of("Dr", j, sc.Dr[j]) for j in range(1, m_max + 1)]
    Nc = [None] + [sin_of("Nc", j, sc.Nc[j]) for j in range(1, n_max + 1)]
    Dc = [None] + [sin_of("Dc", j, sc.Dc[j]) for j in range(1, n_max + 1)]
    R = [gmpy2.mpfr(1)]
    for j in range(1, m_max + 1):
        R.append(R[-1] * S[j - 1] / Dr[j])
    C = [gmpy2.mpfr(1)]
    for j in range(1, n_max + 1):
        C.append(C[-1] * Nc[j] / Dc[j])
    return S, Dc, R, C


def _mp_sin_reduced(r: Fraction):
    if r <= Fraction(1, 2):
        sign, d = 1, r
    elif r < Fraction(3, 2):
        sign, d = 1, 1 - r
    else:
        sign, d = -1, 2 - r
    return sign * gmpy2.sin(gmpy2.const_pi() * mp_from_fraction(d))


def extended_table(params: StableParams, kind: str, T: float, bits: int) -> ExtendedTable:
    """Coefficients at ``bits`` binary precision over ``u <= T``.

    Gamma factors follow exact recurrences along rows and columns, seeded by
    one MPFR gamma per row or column; zeros at gamma poles are placed exactly.
    """
    bits = max(128, -(-bits // 128) * 128)
    key = (params, kind)
    with _EXT_LOCK:
        cached = _EXT.get(key)
    if cached is not None and cached.bits >= bits and cached.base.T >= T:
        if cached.base.T == T:
            return cached
        base = cached.base.restrict(T)
        return ExtendedTable(base, cached.bits, cached.values[: len(base)])
    base = build_table(params, kind, T)
    m_arr, n_arr = base.m.tolist(), base.n.tolist()
    m_max, n_max = max(m_arr), max(n_arr)
    with mp_context(bits):
        alpha = gmpy2.mpfr(params.alpha_spec.to_mpfr(bits + 32))
        rho = mp_from_fraction(params.rho_exact)
        S, Dc, R, C = _mp_sine_products(params, m_max, n_max, bits)
        per_n: Dict[int, list] = {}
        n_top: Dict[int, int] = {}
        for mi, ni in zip(m_arr, n_arr):
            per_n.setdefault(ni, []).append(mi)
            n_top[mi] = max(n_top.get(mi, 0), ni)
        vals: Dict[Tuple[int, int], object] = {}
        if kind == "a":
            # G1(m, n) = 1/Gamma(z0 - n) = (z0 - n) G1(m, n-1), z0 = 1 - rho - m/alpha < 1
            g1: Dict[int, list] = {}
            for mi in range(m_max + 1):
                z0 = 1 - rho - mi / alpha
                seq = [_rgamma_reflect(z0, S[mi])]
                for ni in range(1, n_top.get(mi, 0) + 1):
                    seq.append(seq[-1] * (z0 - ni))
                g1[mi] = seq
            for ni, ms in per_n.items():
                # G2(m, n) = 1/Gamma(alpha rho + m + alpha n), stepped along m
                g2 = 1 / gmpy2.gamma(alpha * rho + alpha * ni)
                last = 0
                for mi in sorted(ms):
                    while last < mi:
                        g2 = g2 / (alpha * rho + last + alpha * ni)
                        last += 1
                    sgn = 1 if (mi + ni) % 2 == 0 else -1
                    vals[(mi, ni)] = sgn * g1[mi][ni] * g2 * R[mi] * C[ni]
        else:
            # H1(m, n) = 1/Gamma(1 + n + m/alpha) = H1(m, n-1) / (n + m/alpha)
            h1: Dict[int, list] = {}
            for mi in range(m_max + 1):
                seq = [None, 1 / gmpy2.gamma(2 + mi / alpha)]
                for ni in range(2, n_top.get(mi, 1) + 1):
                    seq.append(seq[-1] / (ni + mi / alpha))
                h1[mi] = seq
            for ni, ms in per_n.items():
                w0 = -alpha * ni
                # 1/Gamma(-alpha n) by reflection with the exactly reduced sin(pi alpha n),
                # then 1/Gamma(w - 1) = (w - 1)/Gamma(w) along m
                h2 = -Dc[ni] * gmpy2.gamma(1 - w0) / gmpy2.const_pi()
                last = 0
                for mi in sorted(ms):
                    while last < mi:
                        h2 = h2 * (w0 - last - 1)
                        last += 1
                    sgn = 1 if (mi + ni) % 2 == 0 else -1
                    vals[(mi, ni)] = sgn * h1[mi][ni] * h2 * R[mi] * C[ni]
        values = tuple(vals[(mi, ni)] for mi, ni in zip(m_arr, n_arr))
    ext = ExtendedTable(base, bits, values)
    with _EXT_LOCK:
        current = _EXT.get(key)
        if current is None or (current.bits <= bits and current.base.T <= T):
            _EXT[key] = ext
    return ext


def _rgamma_reflect(z, sin_piz):
    """1/Gamma(z) given an exactly reduced sin(pi z)."""
    if float(z) >= 0.5:
        return 1 / gmpy2.gamma(z)
    if sin_piz == 0:
        return gmpy2.mpfr(0)
    return sin_piz * gmpy2.gamma(1 - z) / gmpy2.const_pi()


# -- diagnostics -------------------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    min_row_sin: float
    argmin_row: int
    min_col_sin: float
    argmin_col: int
    log10_amplification: float
    severity: str  # "none" or "flagged"
    verdict: str

    def as_dict(self):
        return {
            "min_row_sin": self.min_row_sin,
            "argmin_row": self.argmin_row,
            "min_col_sin": self.min_col_sin,
            "argmin_col": self.argmin_col,
            "log10_amplification": self.log10_amplification,
            "severity": self.severity,
            "verdict": self.verdict,
        }


def condition_report(params: StableParams, T: float) -> ConditionReport:
    """Smallest sine denominators up to ``T``; flagged when they amplify beyond 1e8."""
    inv, alpha = params.inv_alpha_spec, params.alpha_spec
    ln10 = math.log(10.0)

    def scan(base, top):
        best, arg = math.inf, 0
        for j in range(1, top + 1):
            y = AffineReal(Fraction(0), Fraction(j), base)
            s = sinpi_signed(float(y), y)
            lg = -math.inf if s.sign == 0 else s.logabs
            if lg < best:
                best, arg = lg, j
        return best, arg

    lr, jr = scan(inv, max(1, int(math.floor(T))))
    lc, jc = scan(alpha, max(1, int(math.floor(T / params.alpha))))
    amp = -(lr + lc) / ln10
    severity = "flagged" if amp > 8.0 else "none"
    return ConditionReport(
        math.exp(lr) if lr > -745 else 0.0, jr,
        math.exp(lc) if lc > -745 else 0.0, jc,
        amp, severity, params.alpha_class.verdict,
    )


@dataclass(frozen=True)
class CklTag:
    in_class: bool
    k: int = 0
    l: int = 0


def detect_ckl(params: StableParams, k_max: int = 50) -> CklTag:
    """Search ``rho + k = l/alpha`` over ``|k| <= k_max``, ``1 <= |l| <= ceil(2(k_max+1))``."""
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    l_max = int(math.ceil(2 * (k_max + 1)))
    with mp_context(192):
        alpha = params.alpha_spec.to_mpfr(192)
        rho = mp_from_fraction(params.rho_exact)
        ks = [0] + [sg * k for k in range(1, k_max + 1) for sg in (1, -1)]
        for k in ks:
            target = (rho + k) * alpha  # l must equal this
            l = int(gmpy2.rint(target))
            if l == 0 or abs(l) > l_max:
                continue
            if abs(float(rho + k - l / alpha)) <= POLE_TOL:
                return CklTag(True, k, l)
    return CklTag(False)
