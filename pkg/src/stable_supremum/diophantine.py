"""Continued fractions, convergents, distance to integers and the set L.

A real x belongs to L when, for some b > 1, the inequality ``<q x> < b**-q``
holds for infinitely many integers q.  Equivalently, the partial quotients
of x satisfy ``a_{n+1} > b**q_n`` infinitely often.  Only finite data can be
inspected, so :func:`classify_L` reports evidence up to a depth and nothing
more.

Real numbers enter through :class:`RealSpec`.  Every kind supports exact
floor-of-fixed-point extraction, so reductions such as ``l * alpha mod 2``
stay exact for large integer multipliers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import List, Optional, Tuple

import gmpy2
import numpy as np

from .errors import DepthError, DomainError, ParseError, ResourceError

__all__ = [
    "RealSpec",
    "AffineReal",
    "ContinuedFraction",
    "Convergent",
    "ErrorBounds",
    "LClassification",
    "parse_real",
    "cf_expand",
    "convergents",
    "approx_error_bounds",
    "dist_to_integer",
    "classify_L",
    "construct_L_member",
    "WITNESS_BASE",
    "WITNESS_MIN_Q",
]

WITNESS_BASE = 2
WITNESS_MIN_Q = 5
PROFILE_Q_CAP = 100_000
DEFAULT_BIT_BUDGET = 10**6


def _floor_div_sqrt(p: int, q: int, d: int, r: int) -> int:
    """floor((p + q*sqrt(d)) / r) for r > 0 and non-square d."""
    if q >= 0:
        s = math.isqrt(q * q * d)
    else:
        s = -(math.isqrt(q * q * d) + 1)
    # the true numerator lies strictly between p+s and p+s+1
    return (p + s) // r


def _cf_of_fraction(x: Fraction, max_terms: Optional[int] = None) -> Tuple[int, List[int]]:
    num, den = x.numerator, x.denominator
    a0, rem = divmod(num, den)
    terms = []
    num, den = den, rem
    while den and (max_terms is None or len(terms) < max_terms):
        a, rem = divmod(num, den)
        terms.append(a)
        num, den = den, rem
    return a0, terms


def _fraction_of_cf(a0: int, terms) -> Fraction:
    p_prev, p = 1, a0
    q_prev, q = 0, 1
    for a in terms:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return Fraction(p, q)


@dataclass(frozen=True)
class RealSpec:
    """Exact description of a real number.

    ``kind`` is one of ``decimal`` (literal with ``digits`` fractional digits),
    ``surd`` for ``(p + q*sqrt(d)) / r``, ``cf`` for an explicit partial-quotient
    list, or ``rational``.  A finite explicit list is its exact rational value;
    it classifies as ``Rational`` unless its quotients witness membership of L.
    """

    kind: str
    value: Optional[Fraction] = None
    digits: int = 0
    p: int = 0
    q: int = 0
    d: int = 0
    r: int = 1
    a0: int = 0
    terms: Tuple[int, ...] = ()
    text: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind == "surd":
            if self.d < 2 or math.isqrt(self.d) ** 2 == self.d:
                raise DomainError(f"surd radicand must be a non-square integer >= 2, got {self.d}")
            if self.r == 0:
                raise DomainError("surd denominator must be nonzero")
            if self.q == 0:
                raise DomainError("surd coefficient of the square root must be nonzero")
            if self.r < 0:
                object.__setattr__(self, "p", -self.p)
                object.__setattr__(self, "q", -self.q)
                object.__setattr__(self, "r", -self.r)
            g = math.gcd(math.gcd(self.p, self.q), self.r)
            if g > 1:
                for name in ("p", "q", "r"):
                    object.__setattr__(self, name, getattr(self, name) // g)
        elif self.kind == "cf":
            if any(a < 1 for a in self.terms):
                raise DomainError("partial quotients after the first must be >= 1")
            object.__setattr__(self, "value", _fraction_of_cf(self.a0, self.terms))
        elif self.kind in ("decimal", "rational"):
            object.__setattr__(self, "value", Fraction(self.value))
        else:
            raise DomainError(f"unknown real kind {self.kind!r}")
        if not self.text:
            object.__setattr__(self, "text", self._default_text())

    # constructors ---------------------------------------------------------

    @classmethod
    def decimal(cls, literal: str) -> "RealSpec":
        try:
            dec = Decimal(literal.strip())
        except InvalidOperation as exc:
            raise ParseError(f"not a decimal literal: {literal!r}") from exc
        if not dec.is_finite():
            raise ParseError(f"not a finite decimal: {literal!r}")
        digits = max(0, -dec.as_tuple().exponent)
        return cls("decimal", value=Fraction(dec), digits=digits, text=literal.strip())

    @classmethod
    def surd(cls, p: int, q: int, d: int, r: int = 1) -> "RealSpec":
        return cls("surd", p=p, q=q, d=d, r=r)

    @classmethod
    def sqrt(cls, d: int) -> "RealSpec":
        return cls("surd", p=0, q=1, d=d, r=1)

    @classmethod
    def from_cf(cls, a0: int, terms) -> "RealSpec":
        return cls("cf", a0=int(a0), terms=tuple(int(a) for a in terms))

    @classmethod
    def rational(cls, value) -> "RealSpec":
        return cls("rational", value=Fraction(value))

    def _default_text(self) -> str:
        if self.kind == "surd":
            if self.p == 0 and self.q == 1 and self.r == 1:
                return f"sqrt:{self.d}"
            sign = "+" if self.q > 0 else "-"
            return f"surd:({self.p}{sign}{abs(self.q)}*sqrt:{self.d})/{self.r}"
        if self.kind == "cf":
            if len(self.terms) > 12:
                body = ",".join(map(str, self.terms[:12])) + ",..."
            else:
                body = ",".join(map(str, self.terms))
            return f"cf:[{self.a0};{body}]"
        return str(self.value)

    # numerics -------------------------------------------------------------

    @property
    def is_exact_rational(self) -> bool:
        return self.kind != "surd"

    def fixed(self, bits: int) -> int:
        """Exact ``floor(x * 2**bits)``."""
        if self.kind == "surd":
            return _floor_div_sqrt(self.p << bits, self.q << bits, self.d, self.r)
        v = self.value
        return (v.numerator << bits) // v.denominator

    def __float__(self) -> float:
        cached = self.__dict__.get("_float")
        if cached is None:
            if self.kind == "surd":
                prec = 128 + self.p.bit_length() + self.q.bit_length() + self.d.bit_length()
                with gmpy2.context(precision=prec):
                    cached = float((self.p + self.q * gmpy2.sqrt(self.d)) / self.r)
            else:
                cached = float(self.value)
            object.__setattr__(self, "_float", cached)
        return cached

    def to_mpfr(self, bits: int):
        """Value at ``bits`` of binary precision (created in a private context)."""
        with gmpy2.context(precision=bits):
            if self.kind == "surd":
                return (self.p + self.q * gmpy2.sqrt(gmpy2.mpfr(self.d))) / self.r
            return gmpy2.mpfr(gmpy2.mpq(self.value.numerator, self.value.denominator))

    # exact transformations -------------------------------------------------

    def reciprocal(self) -> "RealSpec":
        if self.kind == "surd":
            norm = self.p * self.p - self.q * self.q * self.d
            return RealSpec.surd(self.r * self.p, -self.r * self.q, self.d, norm)
        if self.value == 0:
            raise ZeroDivisionError("reciprocal of zero")
        if self.kind == "cf":
            if self.a0 == 0 and self.terms:
                return RealSpec.from_cf(self.terms[0], self.terms[1:])
            if self.a0 > 0:
                return RealSpec.from_cf(0, (self.a0,) + self.terms)
        return RealSpec.rational(1 / self.value)

    def shift(self, k: int) -> "RealSpec":
        if self.kind == "surd":
            return RealSpec.surd(self.p + k * self.r, self.q, self.d, self.r)
        if self.kind == "cf":
            return RealSpec.from_cf(self.a0 + k, self.terms)
        if self.kind == "decimal":
            return RealSpec("decimal", value=self.value + k, digits=self.digits)
        return RealSpec.rational(self.value + k)

    def scale(self, z) -> "RealSpec":
        z = Fraction(z)
        if z == 0:
            return RealSpec.rational(0)
        if self.kind == "surd":
            return RealSpec.surd(self.p * z.numerator, self.q * z.numerator, self.d, self.r * z.denominator)
        if self.kind == "cf":
            a0, terms = _cf_of_fraction(self.value * z)
            return RealSpec.from_cf(a0, terms)
        return RealSpec.rational(self.value * z)

    def __str__(self):
        if len(self.text) <= 120:
            return self.text
        if self.kind == "cf":
            return "cf:[%d;%s]" % (self.a0, ",".join(_short_int(t) for t in self.terms))
        return self.text[:100] + "..."


def _short_int(n: int) -> str:
    if n < 10**12:
        return str(n)
    if n & (n - 1) == 0:
        return f"2^{n.bit_length() - 1}"
    return f"<{len(str(n))}-digit>"


_SURD_RE = re.compile(
    r"^surd:\(\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt:(\d+)\s*\)\s*(?:/\s*([+-]?\d+))?$"
)
_SQRT_RE = re.compile(r"^sqrt:(\d+)$")
_CF_RE = re.compile(r"^cf:\[\s*([+-]?\d+)\s*(?:;\s*(\d+(?:\s*,\s*\d+)*)\s*)?\]$")
_RATIO_RE = re.compile(r"^([+-]?\d+)\s*/\s*(\d+)$")


def parse_real(text: str) -> RealSpec:
    """Parse ``1.414``, ``3/4``, ``sqrt:2``, ``surd:(1+1*sqrt:5)/2`` or ``cf:[1;2,2,2]``."""
    s = text.strip()
    try:
        m = _SURD_RE.match(s)
        if m:
            p, sign, q, d, r = m.groups()
            qv = int(q) if sign == "+" else -int(q)
            return RealSpec("surd", p=int(p), q=qv, d=int(d), r=int(r) if r else 1, text=s)
        m = _SQRT_RE.match(s)
        if m:
            return RealSpec("surd", p=0, q=1, d=int(m.group(1)), r=1, text=s)
        m = _CF_RE.match(s)
        if m:
            a0 = int(m.group(1))
            terms = tuple(int(t) for t in m.group(2).split(",")) if m.group(2) else ()
            return RealSpec("cf", a0=a0, terms=terms, text=s)
        m = _RATIO_RE.match(s)
        if m:
            if int(m.group(2)) == 0:
                raise ParseError(f"zero denominator in {text!r}")
            return RealSpec("rational", value=Fraction(int(m.group(1)), int(m.group(2))), text=s)
    except DomainError as exc:
        raise ParseError(str(exc)) from exc
    if s.startswith(("surd:", "sqrt:", "cf:")):
        raise ParseError(f"malformed real literal: {text!r}")
    return RealSpec.decimal(s)


@dataclass(frozen=True)
class AffineReal:
    """``c0 + c1 * base`` with rational coefficients, reducible modulo 2 exactly."""

    c0: Fraction
    c1: Fraction
    base: RealSpec

    def reduce_mod2(self, bits: int = 128):
        c0, c1 = Fraction(self.c0), Fraction(self.c1)
        if c1 == 0 or self.base.is_exact_rational:
            v = c0 if c1 == 0 else c0 + c1 * self.base.value
            return v % 2, True
        extra = bits + abs(c1.numerator).bit_length() + 16
        f = self.base.fixed(extra)
        approx = c0 + Fraction(c1.numerator * f, c1.denominator << extra)
        return approx % 2, False

    def __float__(self):
        return float(self.c0) + float(self.c1) * float(self.base)


# -- continued fractions -----------------------------------------------------

@dataclass(frozen=True)
class ContinuedFraction:
    """``[a0; a1, a2, ...]``; ``rational`` marks an exact terminating expansion."""

    a0: int
    terms: Tuple[int, ...]
    exhausted: bool = False
    rational: bool = False

    def __len__(self):
        return len(self.terms)

    def quotient(self, n: int) -> int:
        return self.a0 if n == 0 else self.terms[n - 1]

    def as_realspec(self) -> RealSpec:
        return RealSpec.from_cf(self.a0, self.terms)

    def __str__(self):
        return f"[{self.a0}; {', '.join(map(_short_int, self.terms))}]"


@dataclass(frozen=True)
class Convergent:
    n: int
    p: int
    q: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)


def cf_expand(x: RealSpec, max_terms: int) -> ContinuedFraction:
    """Partial quotients ``a0`` and up to ``max_terms`` further terms."""
    if max_terms < 1:
        raise DomainError("max_terms must be >= 1")
    if x.kind == "cf":
        done = max_terms >= len(x.terms)
        return ContinuedFraction(x.a0, x.terms[:max_terms], exhausted=done, rational=done)
    if x.kind == "rational":
        a0, terms = _cf_of_fraction(x.value, max_terms)
        done = len(terms) < max_terms or _fraction_of_cf(a0, terms) == x.value
        return ContinuedFraction(a0, tuple(terms), exhausted=done, rational=done)
    if x.kind == "decimal":
        limit = 10**x.digits
        a0, full = _cf_of_fraction(x.value)
        terms = []
        q_prev, q = 0, 1
        truncated = False
        for a in full:
            q_next = a * q + q_prev
            if q_next * q_next > limit:
                truncated = True
                break
            terms.append(a)
            q_prev, q = q, q_next
            if len(terms) >= max_terms:
                break
        exhausted = truncated or len(terms) == len(full)
        return ContinuedFraction(a0, tuple(terms), exhausted=exhausted, rational=not truncated and len(terms) == len(full))
    # quadratic surd: x = (P + sqrt(D)) / Q with Q | D - P^2
    p, q, d, r = x.p, x.q, x.d, x.r
    D = q * q * d
    P, Q = (p, r) if q > 0 else (-p, -r)
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    s = math.isqrt(D)
    quotients = []
    while len(quotients) < max_terms + 1:
        if Q > 0:
            a = (P + s) // Q
        else:
            a = -((P + s) // -Q) - 1
        quotients.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    return ContinuedFraction(quotients[0], tuple(quotients[1:]))


def convergents(cf: ContinuedFraction, n: int) -> List[Convergent]:
    """``p_k / q_k`` for ``k = 0..n``."""
    if n < 0 or n > len(cf.terms):
        raise DepthError(f"convergent index {n} exceeds the {len(cf.terms)} available partial quotients")
    out = []
    p_prev2, p_prev1 = 0, 1
    q_prev2, q_prev1 = 1, 0
    for k in range(n + 1):
        a = cf.quotient(k)
        p = a * p_prev1 + p_prev2
        q = a * q_prev1 + q_prev2
        out.append(Convergent(k, p, q))
        p_prev2, p_prev1 = p_prev1, p
        q_prev2, q_prev1 = q_prev1, q
    return out


@dataclass(frozen=True)
class ErrorBounds:
    lower: Fraction
    upper: Fraction
    actual: Fraction  # within 2**-precision_bits of |x - p_n/q_n|
    precision_bits: int

    def as_floats(self):
        return float(self.lower), float(self.upper), float(self.actual)

    @property
    def holds(self) -> bool:
        return self.lower < self.actual < self.upper


def approx_error_bounds(x: RealSpec, n: int) -> ErrorBounds:
    cf = cf_expand(x, n + 2)
    if x.kind != "surd" and len(cf.terms) < n + 2:
        raise DepthError(f"need {n + 2} partial quotients, expansion has {len(cf.terms)}")
    conv = convergents(cf, n + 1)
    pn, qn = conv[n].p, conv[n].q
    qn1 = conv[n + 1].q
    bits = 2 * (qn.bit_length() + qn1.bit_length()) + 128
    f = x.fixed(bits)
    actual = Fraction(abs(f * qn - (pn << bits)), qn << bits)
    return ErrorBounds(Fraction(1, qn * (qn + qn1)), Fraction(1, qn * qn1), actual, bits)


def dist_to_integer(y) -> float:
    """``<y>``: distance to the nearest integer, in [0, 1/2]."""
    if isinstance(y, RealSpec):
        bits = 80
        frac = Fraction(y.fixed(bits) % (1 << bits), 1 << bits)
    elif isinstance(y, AffineReal):
        r, _ = y.reduce_mod2()
        frac = r % 1
    elif isinstance(y, (int, Fraction)):
        frac = Fraction(y) % 1
    else:
        y = float(y)
        frac = y - math.floor(y)
        return min(frac, 1.0 - frac)
    return float(min(frac, 1 - frac))


# -- the set L ---------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    n: int
    a_next: int
    q_n: int
    b: float  # a_next ** (1 / q_n)


@dataclass(frozen=True)
class LClassification:
    verdict: str  # "InL-witnessed", "NotInL-to-depth" or "Rational"
    depth_examined: int
    witnesses: Tuple[Witness, ...]
    profile_q: np.ndarray = field(repr=False, compare=False)
    profile_value: np.ndarray = field(repr=False, compare=False)

    @property
    def profile(self):
        return list(zip(self.profile_q.tolist(), self.profile_value.tolist()))


def _profile(x: RealSpec, q_max: int):
    q_max = max(1, min(q_max, PROFILE_Q_CAP))
    bits = 64 + q_max.bit_length() + 8
    one = 1 << bits
    half = one >> 1
    f = x.fixed(bits)
    qs = np.arange(1, q_max + 1, dtype=np.int64)
    out = np.empty(q_max)
    for i in range(q_max):
        rem = ((i + 1) * f) & (one - 1)
        dist = rem if rem <= half else one - rem
        out[i] = -math.inf if dist == 0 else (math.log(dist) - bits * math.log(2.0)) / (i + 1)
    if x.kind != "surd":
        # exact rationals: mark multiples of the denominator exactly
        den = x.value.denominator
        if den <= q_max:
            out[den - 1 :: den] = -math.inf
    return qs, out


def classify_L(x: RealSpec, depth: int, profile_q_max: int = PROFILE_Q_CAP) -> LClassification:
    """Scan ``a_{n+1}`` against ``2**q_n`` for ``n <= depth``.

    A witness is recorded when ``a_{n+1} >= 2**q_n`` with ``q_n >= 2``; the verdict is
    ``InL-witnessed`` as soon as one witness has ``q_n >= 5``, even for a finite
    explicit quotient list (which is read as the leading part of an ``L`` member).
    ``profile_q_max=0`` skips the ``ln<q x>/q`` profile.
    """
    if depth < 2:
        raise DomainError("depth must be >= 2")
    cf = cf_expand(x, depth + 1)
    avail = len(cf.terms)
    conv = convergents(cf, avail) if avail else convergents(cf, 0)
    witnesses = []
    for n in range(min(depth, avail - 1) + 1 if avail else 0):
        a_next = cf.terms[n]
        qn = conv[n].q
        # q_0 = 1 would flag every a_1 >= 2, so witnesses start at q_n = 2
        if 2 <= qn < a_next.bit_length() and a_next >= (1 << qn):
            b = math.exp(math.log(a_next) / qn)
            witnesses.append(Witness(n, a_next, qn, b))
    q_top = min(conv[-1].q, profile_q_max, PROFILE_Q_CAP)
    if q_top >= 1:
        qs, values = _profile(x, q_top)
    else:
        qs, values = np.zeros(0, dtype=np.int64), np.zeros(0)
    if any(w.q_n >= WITNESS_MIN_Q for w in witnesses):
        verdict = "InL-witnessed"
    elif cf.rational:
        verdict = "Rational"
    else:
        verdict = "NotInL-to-depth"
    return LClassification(verdict, min(depth, avail), tuple(witnesses), qs, values)


def construct_L_member(prefix: ContinuedFraction, stages: int, bit_budget: int = DEFAULT_BIT_BUDGET) -> ContinuedFraction:
    """Append ``stages`` quotients ``a_{n+1} = 2**q_n``."""
    if stages < 1:
        raise DomainError("stages must be >= 1")
    terms = list(prefix.terms)
    conv = convergents(ContinuedFraction(prefix.a0, tuple(terms)), len(terms))
    q_prev = conv[-2].q if len(conv) > 1 else 0
    q = conv[-1].q
    for _ in range(stages):
        if q > bit_budget:
            raise ResourceError(f"next quotient 2**q_n needs {q} bits, budget is {bit_budget}")
        a = 1 << q
        terms.append(a)
        q_prev, q = q, a * q + q_prev
    return ContinuedFraction(prefix.a0, tuple(terms))
