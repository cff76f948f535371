"""Density of the supremum of a strictly stable Levy process as a convergent double series."""

from .coefficients import StableParams, build_table, coeff_a, coeff_b, condition_report, detect_ckl
from .density import SeriesResult, cdf, density, quantile, survival, total_mass
from .diophantine import RealSpec, classify_L, cf_expand, construct_L_member, convergents, parse_real
from .errors import SupremumError
from .sigloc import SignedLogValue

__all__ = [
    "StableParams",
    "RealSpec",
    "SignedLogValue",
    "SeriesResult",
    "SupremumError",
    "parse_real",
    "cf_expand",
    "convergents",
    "classify_L",
    "construct_L_member",
    "coeff_a",
    "coeff_b",
    "build_table",
    "condition_report",
    "detect_ckl",
    "density",
    "cdf",
    "survival",
    "quantile",
    "total_mass",
]

__version__ = "0.1.0"
