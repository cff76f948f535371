"""Signed-logarithmic real arithmetic and sign-tracked Gamma / sin(pi y).

A :class:`SignedLogValue` stores ``sign * exp(logabs)``.  Internally the
log-magnitude is split as ``e2 * ln 2 + lnm`` with an integer binary exponent
and ``lnm`` in ``[-ln 2, 0)``, so products and round trips keep full double
accuracy no matter how large the magnitude gets.

Two working precisions are used across the package: hardware doubles (this
module's scalar functions) and MPFR through :mod:`gmpy2` (the ``mp_*``
helpers at the bottom), selected by callers when cancellation demands it.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction
from typing import Iterable, Union

import gmpy2

from .errors import PoleProximityError

__all__ = [
    "SignedLogValue",
    "ZERO",
    "ONE",
    "slv_mul",
    "slv_div",
    "slv_accumulate",
    "log_gamma_signed",
    "rgamma_signed",
    "sinpi_signed",
    "reduce_mod2",
    "POLE_TOL",
]

POLE_TOL = 1e-12
_LN2 = math.log(2.0)
_LNPI = math.log(math.pi)


class SignedLogValue:
    """Real number as (sign, log|value|); ``sign == 0`` is exact zero."""

    __slots__ = ("sign", "_e2", "_lnm")

    def __init__(self, sign: int, logabs: float = 0.0):
        if sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {sign!r}")
        if sign == 0:
            self.sign, self._e2, self._lnm = 0, 0, 0.0
            return
        if not math.isfinite(logabs):
            raise ValueError("logabs must be finite for a nonzero value")
        k = math.floor(logabs / _LN2) + 1
        self.sign = sign
        self._e2 = k
        self._lnm = logabs - k * _LN2
        self._renorm()

    @classmethod
    def _raw(cls, sign, e2, lnm):
        self = object.__new__(cls)
        self.sign, self._e2, self._lnm = sign, e2, lnm
        if sign:
            self._renorm()
        else:
            self._e2, self._lnm = 0, 0.0
        return self

    def _renorm(self):
        lnm = self._lnm
        if -_LN2 <= lnm < 0.0:
            return
        k = math.floor(lnm / _LN2) + 1
        self._lnm = lnm - k * _LN2
        self._e2 += k

    @classmethod
    def from_float(cls, v: float) -> "SignedLogValue":
        if v == 0.0:
            return ZERO
        if not math.isfinite(v):
            raise ValueError(f"cannot represent {v!r}")
        m, e = math.frexp(abs(v))
        return cls._raw(1 if v > 0 else -1, e, math.log(m))

    @classmethod
    def from_exact(cls, value: Union[int, Fraction]) -> "SignedLogValue":
        """Exact rational input of any size (big-integer numerator/denominator)."""
        value = Fraction(value)
        if value == 0:
            return ZERO
        sign = 1 if value > 0 else -1
        num, den = abs(value.numerator), value.denominator
        shift = num.bit_length() - den.bit_length()
        # keep 64 significant bits of the quotient
        if shift >= 64:
            q = num // (den << (shift - 64))
            e = shift - 64
        else:
            q = (num << (64 - shift)) // den
            e = shift - 64
        m, e2 = math.frexp(float(q))
        return cls._raw(sign, e2 + e, math.log(m))

    @property
    def logabs(self) -> float:
        return self._e2 * _LN2 + self._lnm if self.sign else 0.0

    @property
    def log10abs(self) -> float:
        return self.logabs / math.log(10.0) if self.sign else -math.inf

    def frexp(self):
        """``(mantissa, exponent)`` with value ``mantissa * 2**exponent`` and ``|mantissa|`` in [0.5, 1)."""
        if not self.sign:
            return 0.0, 0
        return self.sign * math.exp(self._lnm), self._e2

    def __float__(self) -> float:
        if not self.sign:
            return 0.0
        try:
            return math.ldexp(self.sign * math.exp(self._lnm), self._e2)
        except OverflowError:
            return self.sign * math.inf

    def __mul__(self, other):
        if not isinstance(other, SignedLogValue):
            return NotImplemented
        return slv_mul(self, other)

    def __truediv__(self, other):
        if not isinstance(other, SignedLogValue):
            return NotImplemented
        return slv_div(self, other)

    def __neg__(self):
        return SignedLogValue._raw(-self.sign, self._e2, self._lnm)

    def __abs__(self):
        return SignedLogValue._raw(abs(self.sign), self._e2, self._lnm)

    def __eq__(self, other):
        if not isinstance(other, SignedLogValue):
            return NotImplemented
        return (self.sign, self._e2, self._lnm) == (other.sign, other._e2, other._lnm)

    def __hash__(self):
        return hash((self.sign, self._e2, self._lnm))

    def __repr__(self):
        if not self.sign:
            return "SignedLogValue(0)"
        return f"SignedLogValue({self.sign:+d}, {self.logabs!r})"


ZERO = SignedLogValue._raw(0, 0, 0.0)
ONE = SignedLogValue._raw(1, 1, -_LN2)


def slv_mul(a: SignedLogValue, b: SignedLogValue) -> SignedLogValue:
    if not (a.sign and b.sign):
        return ZERO
    return SignedLogValue._raw(a.sign * b.sign, a._e2 + b._e2, a._lnm + b._lnm)


def slv_div(a: SignedLogValue, b: SignedLogValue) -> SignedLogValue:
    if not b.sign:
        raise ZeroDivisionError("division by a zero SignedLogValue")
    if not a.sign:
        return ZERO
    return SignedLogValue._raw(a.sign * b.sign, a._e2 - b._e2, a._lnm - b._lnm)


def slv_accumulate(terms: Iterable[SignedLogValue]) -> SignedLogValue:
    """Signed log-sum-exp: scale by the largest binary exponent, then ``fsum``."""
    terms = [t for t in terms if t.sign]
    if not terms:
        return ZERO
    top = max(t._e2 for t in terms)
    total = math.fsum(math.ldexp(t.sign * math.exp(t._lnm), t._e2 - top) for t in terms)
    if total == 0.0:
        return ZERO
    out = SignedLogValue.from_float(total)
    return SignedLogValue._raw(out.sign, out._e2 + top, out._lnm)


def _pole_index(x: float):
    if x <= POLE_TOL:
        k = round(x)
        if k <= 0 and abs(x - k) < POLE_TOL:
            return -k
    return None


def log_gamma_signed(x: float) -> SignedLogValue:
    """Gamma(x) with sign; reflection Gamma(x) = pi / (sin(pi x) Gamma(1 - x)) for x < 0."""
    k = _pole_index(x)
    if k is not None:
        raise PoleProximityError(f"Gamma argument {x!r} is within {POLE_TOL:g} of pole -{k}", index=k)
    if x > 0:
        return SignedLogValue(1, math.lgamma(x))
    s = sinpi_signed(x)
    return SignedLogValue(s.sign, _LNPI - s.logabs - math.lgamma(1.0 - x))


def rgamma_signed(x: float, at_pole: str = "zero") -> SignedLogValue:
    """1/Gamma(x); exact zero at (numerical) poles unless ``at_pole='raise'``."""
    k = _pole_index(x)
    if k is not None:
        if at_pole == "raise":
            raise PoleProximityError(f"Gamma argument {x!r} is within {POLE_TOL:g} of pole -{k}", index=k)
        return ZERO
    g = log_gamma_signed(x)
    return SignedLogValue._raw(g.sign, -g._e2, -g._lnm)


# -- sin(pi y) ---------------------------------------------------------------

def reduce_mod2(y, bits: int = 128):
    """Reduce an exact real modulo 2.

    Accepts ints, Fractions, finite floats (taken as exact binary rationals) and
    objects exposing ``reduce_mod2(bits) -> (Fraction, exact)``.  Returns
    ``(r, exact)`` with ``r`` a Fraction in ``[0, 2)``; when ``exact`` is False
    the error of ``r`` is at most a few units of ``2**-bits``.
    """
    if hasattr(y, "reduce_mod2"):
        return y.reduce_mod2(bits)
    r = Fraction(y) % 2
    return r, True


def _sin_from_reduced(r: Fraction, exact: bool) -> SignedLogValue:
    if exact and r.denominator == 1:
        return ZERO
    # sin(pi r) = sign * sin(pi d) with d the distance of r to the nearest integer
    if r <= Fraction(1, 2):
        sign, d = 1, r
    elif r < Fraction(3, 2):
        d = 1 - r
        sign = 1 if d > 0 else -1
        d = abs(d)
    else:
        sign, d = -1, 2 - r
    if d == 0:
        return ZERO
    if d > Fraction(1, 10**8):
        return SignedLogValue(sign, math.log(math.sin(math.pi * float(d))))
    # sin(pi d) = pi d (1 - (pi d)^2/6 + ...), d may underflow a double
    logd = math.log(d.numerator) - math.log(d.denominator)
    pd2 = (math.pi * float(d)) ** 2 if d > Fraction(1, 10**150) else 0.0
    return SignedLogValue(sign, _LNPI + logd + math.log1p(-pd2 / 6.0))


def sinpi_signed(y: float, y_exact=None) -> SignedLogValue:
    """sin(pi y) as a SignedLogValue.

    With ``y_exact`` the range reduction is performed on the exact value, so the
    reduced fraction is correct to ~2**-128 even for huge multipliers.
    """
    if y_exact is not None:
        r, exact = reduce_mod2(y_exact)
        return _sin_from_reduced(r, exact)
    if not math.isfinite(y):
        raise ValueError("sinpi_signed needs a finite argument")
    # a double is an exact binary rational; reducing it exactly avoids 2 - r == 0 for tiny negative y
    return _sin_from_reduced(Fraction(y) % 2, True)


# -- extended precision (MPFR) -----------------------------------------------

def digits_to_bits(digits: float) -> int:
    """Binary precision for ``digits`` decimal digits, rounded up to a multiple of 64."""
    bits = int(math.ceil(digits * math.log2(10.0)))
    return max(128, -(-bits // 64) * 64)


@contextmanager
def mp_context(bits: int):
    """Private MPFR context; callers never touch the global precision."""
    with gmpy2.context(precision=bits, emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min()):
        yield


def mp_from_fraction(r: Fraction):
    return gmpy2.mpfr(gmpy2.mpq(r.numerator, r.denominator))


def mp_sinpi(r: Fraction, exact: bool = False):
    """sin(pi r) for a reduced ``r`` in [0, 2), evaluated at the active MPFR precision."""
    if exact and r.denominator == 1:
        return gmpy2.mpfr(0)
    if r <= Fraction(1, 2):
        sign, d = 1, r
    elif r < Fraction(3, 2):
        sign, d = 1, 1 - r
    else:
        sign, d = -1, 2 - r
    return sign * gmpy2.sin(gmpy2.const_pi() * mp_from_fraction(d))


def mp_rgamma(z, at_pole: str = "zero"):
    """1/Gamma(z) at the active MPFR precision, with the float pole tolerance."""
    k = _pole_index(float(z))
    if k is not None:
        if at_pole == "raise":
            raise PoleProximityError(f"Gamma argument {float(z)!r} is within {POLE_TOL:g} of pole -{k}", index=k)
        return gmpy2.mpfr(0)
    return 1 / gmpy2.gamma(z)
