"""Running log-averages of prod |sec(pi l x)| and prod |csc(pi l x)|.

For badly approximable x both averages settle at ln 2.  Multiples ``l*x`` are
reduced modulo 1 from a 128-bit fixed-point image of the exact real, carried
through numpy as four 32-bit limbs, so no error accumulates with ``l``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .diophantine import RealSpec
from .errors import DomainError, SingularityError

__all__ = ["ProductTrace", "trig_log_product", "lemma1_rate", "reduced_distances", "KINDS"]

KINDS = ("sec", "csc", "csc-shifted")
SINGULAR_TOL = 1e-14
_BITS = 128
_MASK32 = np.uint64(0xFFFFFFFF)
_TWO64 = 2.0**64


def _limbs(v: int):
    v %= 1 << _BITS
    return [np.uint64((v >> (32 * i)) & 0xFFFFFFFF) for i in range(4)]


def _top64(l: np.ndarray, x: int, y: int) -> np.ndarray:
    """Top 64 bits of ``(l*x + y) mod 2**128`` for 128-bit fixed-point ``x``, ``y``."""
    xs, ys = _limbs(x), _limbs(y)
    carry = np.zeros_like(l)
    out = []
    for i in range(4):
        # l < 2**31 keeps l*limb + limb + carry below 2**64
        acc = l * xs[i] + ys[i] + carry
        out.append(acc & _MASK32)
        carry = acc >> np.uint64(32)
    return (out[3] << np.uint64(32)) | out[2]


def reduced_distances(x: RealSpec, k_max: int, y: Union[float, Fraction, RealSpec] = 0, half: bool = False) -> np.ndarray:
    """Distance of ``l*x + y`` (plus 1/2 when ``half``) to the nearest integer, l = 1..k_max."""
    if k_max >= 1 << 31:
        raise DomainError("k_max must be below 2**31")
    xf = x.fixed(_BITS)
    if isinstance(y, RealSpec):
        yf = y.fixed(_BITS)
    else:
        yv = Fraction(y)
        yf = (yv.numerator << _BITS) // yv.denominator
    if half:
        yf += 1 << (_BITS - 1)
    l = np.arange(1, k_max + 1, dtype=np.uint64)
    top = _top64(l, xf, yf)
    dist = np.minimum(top, np.uint64(0) - top)  # wraps modulo 2**64
    return dist.astype(np.float64) / _TWO64


@dataclass(frozen=True)
class ProductTrace:
    kind: str
    x: RealSpec
    y: float
    k_max: int
    cumulative: np.ndarray = field(repr=False, compare=False)
    rational: bool = False
    no_guarantee: bool = False

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.k_max + 1)

    @property
    def final(self) -> float:
        return float(self.cumulative[-1])

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["k", "normalized_log_product"])
            for k, v in zip(self.k.tolist(), self.cumulative.tolist()):
                w.writerow([k, repr(v)])
        finally:
            if own:
                fh.close()


def trig_log_product(kind: str, x: RealSpec, y=0, k_max: int = 1000) -> ProductTrace:
    """Trace of ``(1/k) sum_{l<=k} ln|f(pi l x + pi y)|`` for f = sec or csc."""
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    if kind != "csc-shifted" and y != 0:
        raise DomainError("a nonzero shift is only available for kind 'csc-shifted'")
    d = reduced_distances(x, k_max, y=y, half=(kind == "sec"))
    bad = np.flatnonzero(d < SINGULAR_TOL)
    if bad.size:
        l = int(bad[0]) + 1
        raise SingularityError(f"multiplier l={l} lands within {SINGULAR_TOL:g} of a pole", index=l)
    terms = -np.log(np.sin(np.pi * d))
    cumulative = np.cumsum(terms) / np.arange(1, k_max + 1)
    yv = float(y) if not isinstance(y, RealSpec) else float(y)
    return ProductTrace(kind, x, yv, k_max, cumulative, rational=x.kind != "surd", no_guarantee=kind == "csc-shifted")


def lemma1_rate(x: RealSpec, kind: str = "sec", k_max: int = 100_000) -> float:
    """Final normalized log-product; tends to ln 2 for x outside L and the rationals."""
    if kind == "csc-shifted":
        raise DomainError("the rate is defined for the unshifted products only")
    return trig_log_product(kind, x, 0, k_max).final
