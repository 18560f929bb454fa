"""Scalar backends for series coefficients.

Two backends are supported:

``"rational"``
    Exact arbitrary-precision rationals (``gmpy2.mpq``).  Every ring
    operation is exact, which lets structural identities be asserted with
    ``== 0`` instead of tolerances.

``"float"``
    IEEE doubles.  Coefficient values may also be numpy arrays of doubles,
    one entry per evaluation point; all arithmetic broadcasts, so the same
    series code runs vectorized over a whole quadrature grid.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from .errors import UsageError

RATIONAL = "rational"
FLOAT = "float"

BACKENDS = (RATIONAL, FLOAT)


def check_backend(name: str) -> str:
    if name not in BACKENDS:
        raise UsageError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    return name


def coerce(backend: str, value):
    """Convert an int/Fraction/str/float into a backend scalar."""
    if backend == RATIONAL:
        if isinstance(value, float):
            raise UsageError("refusing to coerce a float into the rational backend")
        if isinstance(value, Fraction):
            return mpq(value.numerator, value.denominator)
        return mpq(value)
    if isinstance(value, str):
        value = Fraction(value)
    return float(value)


def rational(p, q=1):
    return mpq(p, q)


def is_zero(value) -> bool:
    """True when a coefficient is exactly zero (all entries, for arrays)."""
    if isinstance(value, np.ndarray):
        return bool(np.all(value == 0))
    return value == 0


def to_float(value):
    if isinstance(value, np.ndarray):
        return value
    return float(value)


def as_fraction(value) -> Fraction:
    if isinstance(value, np.ndarray):
        raise UsageError("array scalar has no single rational value")
    if hasattr(value, "numerator"):
        return Fraction(int(value.numerator), int(value.denominator))
    return Fraction(value)


def format_scalar(value) -> str:
    """Render a scalar for reports: 'p/q' on rationals, repr on floats."""
    if isinstance(value, np.ndarray):
        raise UsageError("array scalar cannot be formatted as a single value")
    if hasattr(value, "numerator") and not isinstance(value, (int, float)):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)
    if isinstance(value, int):
        return str(value)
    return repr(float(value))
