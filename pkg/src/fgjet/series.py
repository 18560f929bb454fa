"""Truncated multivariate Taylor series and the radial extension ring.

A :class:`TruncatedSeries` is a polynomial in ``num_vars`` chart variables
kept only through total degree ``cap``; the cap is tracked explicitly and
shrinks through differentiation, so every consumer knows how much jet it
still has.  Coefficients live in one of the two backends of
:mod:`fgjet.backend`.

A :class:`RadialSeries` extends the chart ring by a distinguished radial
variable ``x``: it is a finite sum of terms ``c_{k,p} * x^k * (log x)^p``
with ``p <= 1``, where each ``c_{k,p}`` is a TruncatedSeries.  Negative
``k`` is allowed (simple poles show up in intermediate identities), and the
reliable ``window`` in ``x`` is tracked the same way the chart cap is.

All values are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product as iter_product

from . import backend as be
from .errors import DegreeCapError, DegenerateMetricError, UsageError

INF = math.inf


def _monomial_str(exps) -> str:
    parts = []
    for i, e in enumerate(exps):
        if e == 1:
            parts.append(f"x{i}")
        elif e > 1:
            parts.append(f"x{i}^{e}")
    return "*".join(parts) if parts else "1"


class TruncatedSeries:
    """Sparse truncated Taylor polynomial over a scalar backend."""

    __slots__ = ("num_vars", "cap", "backend", "coeffs", "_sorted")

    def __init__(self, num_vars: int, cap: int, backend: str, coeffs: dict | None = None):
        if cap < 0:
            raise DegreeCapError(f"degree cap {cap} is negative")
        self.num_vars = num_vars
        self.cap = cap
        self.backend = be.check_backend(backend)
        clean = {}
        if coeffs:
            for exps, value in coeffs.items():
                if sum(exps) > cap:
                    raise UsageError(f"exponent {exps} exceeds degree cap {cap}")
                if not be.is_zero(value):
                    clean[exps] = value
        self.coeffs = clean
        self._sorted = None

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int, cap: int, backend: str) -> "TruncatedSeries":
        return cls(num_vars, cap, backend)

    @classmethod
    def constant(cls, value, num_vars: int, cap: int, backend: str) -> "TruncatedSeries":
        value = be.coerce(backend, value) if isinstance(value, (int, Fraction, str)) else value
        return cls(num_vars, cap, backend, {(0,) * num_vars: value})

    @classmethod
    def variable(cls, i: int, num_vars: int, cap: int, backend: str) -> "TruncatedSeries":
        if not 0 <= i < num_vars:
            raise UsageError(f"variable index {i} out of range for {num_vars} variables")
        exps = tuple(1 if j == i else 0 for j in range(num_vars))
        return cls(num_vars, cap, backend, {exps: be.coerce(backend, 1)})

    @classmethod
    def from_terms(cls, terms: dict, num_vars: int, cap: int, backend: str) -> "TruncatedSeries":
        """Build from {exponents: value} with values coerced into the backend."""
        coeffs = {tuple(e): be.coerce(backend, v) for e, v in terms.items()}
        return cls(num_vars, cap, backend, coeffs)

    # -- bookkeeping ---------------------------------------------------

    def _items_by_degree(self):
        if self._sorted is None:
            self._sorted = sorted(
                ((sum(e), e, c) for e, c in self.coeffs.items()), key=lambda t: (t[0], t[1])
            )
        return self._sorted

    def _compat(self, other: "TruncatedSeries"):
        if self.num_vars != other.num_vars:
            raise UsageError(
                f"variable count mismatch: {self.num_vars} vs {other.num_vars}")
        if self.backend != other.backend:
            raise UsageError(f"backend mismatch: {self.backend} vs {other.backend}")

    def is_zero(self) -> bool:
        return not self.coeffs

    def zero_like(self) -> "TruncatedSeries":
        return TruncatedSeries(self.num_vars, self.cap, self.backend)

    def constant_term(self):
        zero_key = (0,) * self.num_vars
        value = self.coeffs.get(zero_key)
        if value is None:
            return be.coerce(self.backend, 0)
        return value

    def coefficient(self, exps: tuple):
        value = self.coeffs.get(tuple(exps))
        if value is None:
            return be.coerce(self.backend, 0)
        return value

    def truncate(self, cap: int) -> "TruncatedSeries":
        cap = min(cap, self.cap)
        kept = {e: c for e, c in self.coeffs.items() if sum(e) <= cap}
        return TruncatedSeries(self.num_vars, cap, self.backend, kept)

    def with_cap(self, cap: int) -> "TruncatedSeries":
        """Declare a (possibly higher) cap; use only for exact polynomials."""
        if cap < self.degree():
            return self.truncate(cap)
        return TruncatedSeries(self.num_vars, cap, self.backend, dict(self.coeffs))

    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    # -- ring operations -----------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TruncatedSeries.constant(other, self.num_vars, self.cap, self.backend)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        self._compat(other)
        cap = min(self.cap, other.cap)
        out = {e: c for e, c in self.coeffs.items() if sum(e) <= cap}
        for e, c in other.coeffs.items():
            if sum(e) > cap:
                continue
            cur = out.get(e)
            out[e] = c if cur is None else cur + c
        return TruncatedSeries(self.num_vars, cap, self.backend, out)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(
            self.num_vars, self.cap, self.backend, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TruncatedSeries.constant(other, self.num_vars, self.cap, self.backend)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        self._compat(other)
        cap = min(self.cap, other.cap)
        a_items = self._items_by_degree()
        b_items = other._items_by_degree()
        if len(a_items) > len(b_items):
            a_items, b_items = b_items, a_items
        out = {}
        for da, ea, ca in a_items:
            if da > cap:
                break
            room = cap - da
            for db, eb, cb in b_items:
                if db > room:
                    break
                key = tuple(x + y for x, y in zip(ea, eb))
                v = ca * cb
                cur = out.get(key)
                out[key] = v if cur is None else cur + v
        return TruncatedSeries(self.num_vars, cap, self.backend, out)

    __rmul__ = __mul__

    def scale(self, q):
        """Multiply by an exact scalar (int or Fraction)."""
        if q == 1:
            return self
        if q == 0:
            return TruncatedSeries(self.num_vars, self.cap, self.backend)
        qv = be.coerce(self.backend, q)
        return TruncatedSeries(
            self.num_vars, self.cap, self.backend, {e: qv * c for e, c in self.coeffs.items()})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TruncatedSeries.constant(other, self.num_vars, self.cap, self.backend)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    # -- calculus -------------------------------------------------------

    def partial(self, i: int) -> "TruncatedSeries":
        """Formal partial derivative in chart variable ``i``; cap drops by 1."""
        if not 0 <= i < self.num_vars:
            raise UsageError(f"variable index {i} out of range")
        if self.cap < 1:
            raise DegreeCapError(
                f"partial derivative needs degree cap >= 1, have {self.cap}")
        out = {}
        for e, c in self.coeffs.items():
            k = e[i]
            if k == 0:
                continue
            key = e[:i] + (k - 1,) + e[i + 1:]
            out[key] = c * k
        return TruncatedSeries(self.num_vars, self.cap - 1, self.backend, out)

    def evaluate(self, point):
        """Evaluate at a point given as a sequence of backend scalars."""
        if len(point) != self.num_vars:
            raise UsageError("point dimension mismatch")
        total = be.coerce(self.backend, 0)
        for e, c in self.coeffs.items():
            term = c
            for xi, ei in zip(point, e):
                for _ in range(ei):
                    term = term * xi
            total = total + term
        return total

    # -- display ----------------------------------------------------------

    def sorted_items(self):
        """(exponents, coefficient) pairs in graded-lexicographic order."""
        return [(e, c) for _, e, c in self._items_by_degree()]

    def __repr__(self):
        if not self.coeffs:
            return f"<series 0 (cap {self.cap})>"
        bits = [f"{c}*{_monomial_str(e)}" for e, c in self.sorted_items()[:6]]
        more = "" if len(self.coeffs) <= 6 else f" +{len(self.coeffs) - 6} terms"
        return f"<series {' + '.join(bits)}{more} (cap {self.cap})>"

    # -- inverses -----------------------------------------------------------

    def reciprocal(self) -> "TruncatedSeries":
        """Multiplicative inverse; requires an invertible constant term."""
        c0 = self.constant_term()
        if be.is_zero(c0):
            raise DegenerateMetricError("series constant term is zero; no reciprocal")
        one = be.coerce(self.backend, 1)
        r0 = one / c0
        base = TruncatedSeries(self.num_vars, self.cap, self.backend,
                               {(0,) * self.num_vars: r0})
        u = self * base - 1  # no constant term
        acc = TruncatedSeries.constant(1, self.num_vars, self.cap, self.backend)
        term = acc
        for _ in range(self.cap):
            term = term * (-u)
            if term.is_zero():
                break
            acc = acc + term
        return acc * base

    def sqrt(self) -> "TruncatedSeries":
        """Square root by Newton iteration; constant term must have an exact root."""
        c0 = self.constant_term()
        s0 = _scalar_sqrt(c0, self.backend)
        t = TruncatedSeries(self.num_vars, self.cap, self.backend,
                            {(0,) * self.num_vars: s0})
        half = Fraction(1, 2)
        for _ in range(max(1, self.cap.bit_length() + 1)):
            t = (t + self * t.reciprocal()).scale(half)
            if (t * t - self).is_zero():
                break
        return t

    def exp(self) -> "TruncatedSeries":
        """exp of the series; rational backend requires zero constant term."""
        c0 = self.constant_term()
        if self.backend == be.RATIONAL and not be.is_zero(c0):
            raise UsageError("exp on the rational backend needs zero constant term")
        nil = self - TruncatedSeries(self.num_vars, self.cap, self.backend,
                                     {(0,) * self.num_vars: c0})
        acc = TruncatedSeries.constant(1, self.num_vars, self.cap, self.backend)
        term = acc
        for k in range(1, self.cap + 1):
            term = (term * nil).scale(Fraction(1, k))
            if term.is_zero():
                break
            acc = acc + term
        if self.backend == be.FLOAT and not be.is_zero(c0):
            import numpy as np
            acc = TruncatedSeries(self.num_vars, self.cap, self.backend,
                                  {e: np.exp(c0) * c for e, c in acc.coeffs.items()})
        return acc


def _scalar_sqrt(value, backend: str):
    if backend == be.FLOAT:
        import numpy as np
        return np.sqrt(value) if hasattr(value, "shape") else math.sqrt(value)
    num, den = int(value.numerator), int(value.denominator)
    if num < 0:
        raise UsageError("square root of a negative rational")
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        raise UsageError(f"{value} has no exact rational square root")
    return be.rational(rn, rd)


# ---------------------------------------------------------------------------
# matrices of series
# ---------------------------------------------------------------------------

def invert_scalar_matrix(rows, backend: str):
    """Gauss-Jordan inverse of a matrix of backend scalars.

    No pivoting: intended for symmetric positive-definite matrices, whose
    leading principal minors never vanish.
    """
    n = len(rows)
    one, zero = be.coerce(backend, 1), be.coerce(backend, 0)
    a = [[rows[i][j] for j in range(n)] for i in range(n)]
    inv = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = a[col][col]
        if be.is_zero(piv) or (hasattr(piv, "shape") and _any_zero(piv)):
            raise DegenerateMetricError("metric degenerate at base point")
        pinv = one / piv
        a[col] = [v * pinv for v in a[col]]
        inv[col] = [v * pinv for v in inv[col]]
        for r in range(n):
            if r == col:
                continue
            f = a[r][col]
            if be.is_zero(f):
                continue
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return inv


def _any_zero(arr) -> bool:
    import numpy as np
    return bool(np.any(arr == 0))


def _mat_mul(A, B):
    n = len(A)
    return [[_sum_terms([A[i][k] * B[k][j] for k in range(n)]) for j in range(n)]
            for i in range(n)]


def _sum_terms(terms):
    acc = terms[0]
    for t in terms[1:]:
        acc = acc + t
    return acc


def matrix_inverse_series(G):
    """Inverse of an n-by-n matrix of TruncatedSeries via a Neumann series.

    The constant-term matrix must be invertible; the result satisfies
    ``G * Ginv == I`` exactly through the common degree cap.
    """
    n = len(G)
    nv, cap, bk = G[0][0].num_vars, min(g.cap for row in G for g in row), G[0][0].backend
    g0 = [[G[i][j].constant_term() for j in range(n)] for i in range(n)]
    g0inv = invert_scalar_matrix(g0, bk)
    g0inv_s = [[TruncatedSeries(nv, cap, bk, {(0,) * nv: g0inv[i][j]})
                for j in range(n)] for i in range(n)]
    M = _mat_mul(g0inv_s, [[G[i][j].truncate(cap) for j in range(n)] for i in range(n)])
    one = TruncatedSeries.constant(1, nv, cap, bk)
    zero = TruncatedSeries.zero(nv, cap, bk)
    N = [[(one if i == j else zero) - M[i][j] for j in range(n)] for i in range(n)]
    acc = [[one if i == j else zero for j in range(n)] for i in range(n)]
    term = acc
    for _ in range(cap):
        term = _mat_mul(N, term)
        if all(t.is_zero() for row in term for t in row):
            break
        acc = [[acc[i][j] + term[i][j] for j in range(n)] for i in range(n)]
    return _mat_mul(acc, g0inv_s)


# ---------------------------------------------------------------------------
# radial ring
# ---------------------------------------------------------------------------

class RadialSeries:
    """Finite sum of ``coeff * x^k * (log x)^p`` terms, ``p <= 1``.

    ``window`` is the largest x-order the object is reliable through;
    arithmetic and d/dx propagate it.  ``math.inf`` marks exact polynomials.
    """

    __slots__ = ("num_vars", "backend", "window", "terms")

    def __init__(self, num_vars: int, backend: str, window, terms: dict | None = None):
        self.num_vars = num_vars
        self.backend = be.check_backend(backend)
        self.window = window
        clean = {}
        if terms:
            for (k, p), c in terms.items():
                if p not in (0, 1):
                    raise UsageError("log power must be 0 or 1")
                if k > window or c.is_zero():
                    continue
                clean[(k, p)] = c
        self.terms = clean

    @classmethod
    def zero(cls, num_vars: int, backend: str, window=INF) -> "RadialSeries":
        return cls(num_vars, backend, window)

    @classmethod
    def from_chart(cls, c: TruncatedSeries, window=INF) -> "RadialSeries":
        return cls(c.num_vars, c.backend, window, {(0, 0): c})

    @classmethod
    def monomial(cls, c: TruncatedSeries, k: int, logp: int = 0, window=INF) -> "RadialSeries":
        return cls(c.num_vars, c.backend, window, {(k, logp): c})

    # -- bookkeeping --------------------------------------------------------

    def _compat(self, other: "RadialSeries"):
        if self.num_vars != other.num_vars or self.backend != other.backend:
            raise UsageError("radial series operands are incompatible")

    def valuation(self):
        """Lowest stored x-order, or +inf for the zero element."""
        return min((k for k, _ in self.terms), default=INF)

    def chart_cap(self):
        return min((c.cap for c in self.terms.values()), default=None)

    def is_zero(self) -> bool:
        return not self.terms

    def zero_like(self) -> "RadialSeries":
        return RadialSeries(self.num_vars, self.backend, self.window)

    def leading_order(self):
        """(x-order, log-power) of the asymptotically largest term, or None."""
        if not self.terms:
            return None
        return min(self.terms, key=lambda kp: (kp[0], -kp[1]))

    def coefficient(self, k: int, logp: int = 0, cap: int | None = None) -> TruncatedSeries:
        c = self.terms.get((k, logp))
        if c is not None:
            return c
        if cap is None:
            cap = self.chart_cap()
            if cap is None:
                raise UsageError("zero radial series needs an explicit cap to report coefficients")
        return TruncatedSeries.zero(self.num_vars, cap, self.backend)

    def truncate_window(self, window) -> "RadialSeries":
        window = min(window, self.window)
        return RadialSeries(self.num_vars, self.backend, window,
                            {kp: c for kp, c in self.terms.items() if kp[0] <= window})

    # -- ring operations ------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, RadialSeries):
            return NotImplemented
        self._compat(other)
        window = min(self.window, other.window)
        out = {kp: c for kp, c in self.terms.items() if kp[0] <= window}
        for kp, c in other.terms.items():
            if kp[0] > window:
                continue
            cur = out.get(kp)
            out[kp] = c if cur is None else cur + c
        return RadialSeries(self.num_vars, self.backend, window, out)

    def __neg__(self):
        return RadialSeries(self.num_vars, self.backend, self.window,
                            {kp: -c for kp, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        return self.mul(other)

    __rmul__ = __mul__

    def mul(self, other, window=None) -> "RadialSeries":
        """Product, optionally hard-capped at ``window`` in x-order.

        Products of two log-bearing terms would need (log x)^2, which the
        ring does not represent; instead of failing, the result's window
        shrinks to just below the first such order, marking everything from
        there on as unreliable.
        """
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, TruncatedSeries):
            other = RadialSeries.from_chart(other)
        if not isinstance(other, RadialSeries):
            raise UsageError(f"cannot multiply RadialSeries by {type(other).__name__}")
        self._compat(other)
        va, vb = self.valuation(), other.valuation()
        wout = min(self.window + vb, other.window + va)
        if window is not None:
            wout = min(wout, window)
        out = {}
        log2_at = None
        for (k1, p1), c1 in self.terms.items():
            for (k2, p2), c2 in other.terms.items():
                k, p = k1 + k2, p1 + p2
                if k > wout:
                    continue
                if p > 1:
                    if log2_at is None or k < log2_at:
                        log2_at = k
                    continue
                v = c1 * c2
                cur = out.get((k, p))
                out[(k, p)] = v if cur is None else cur + v
        if log2_at is not None:
            wout = log2_at - 1
            out = {kp: c for kp, c in out.items() if kp[0] <= wout}
        return RadialSeries(self.num_vars, self.backend, wout, out)

    def scale(self, q):
        if q == 1:
            return self
        return RadialSeries(self.num_vars, self.backend, self.window,
                            {kp: c.scale(q) for kp, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, RadialSeries):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    # -- calculus ----------------------------------------------------------------

    def partial(self, i: int) -> "RadialSeries":
        """Spatial (chart) partial derivative, applied coefficientwise.

        A coefficient whose chart cap is already exhausted cannot be
        differentiated; the window shrinks below its x-order instead.
        """
        window = self.window
        out = {}
        for kp, c in self.terms.items():
            if c.cap < 1:
                window = min(window, kp[0] - 1)
            else:
                out[kp] = c.partial(i)
        if window < self.window:
            out = {kp: c for kp, c in out.items() if kp[0] <= window}
        return RadialSeries(self.num_vars, self.backend, window, out)

    def x_derivative(self) -> "RadialSeries":
        """d/dx; maps x^k log x -> k x^(k-1) log x + x^(k-1)."""
        window = self.window - 1 if self.window is not INF else INF
        out = {}

        def add(kp, c):
            if c.is_zero() or kp[0] > window:
                return
            cur = out.get(kp)
            out[kp] = c if cur is None else cur + c

        for (k, p), c in self.terms.items():
            add((k - 1, p), c.scale(k))
            if p == 1:
                add((k - 1, 0), c)
        return RadialSeries(self.num_vars, self.backend, window, out)

    def x_shift(self, m: int) -> "RadialSeries":
        """Multiply by x^m (m may be negative); exact."""
        window = self.window + m if self.window is not INF else INF
        return RadialSeries(self.num_vars, self.backend, window,
                            {(k + m, p): c for (k, p), c in self.terms.items()})

    def eval_at_x(self, xval: float) -> TruncatedSeries:
        """Evaluate the radial variable at a float ``x > 0``; chart series remains."""
        if self.backend != be.FLOAT:
            raise UsageError("eval_at_x is a float-backend operation")
        if not xval > 0:
            raise UsageError("x must be positive")
        cap = self.chart_cap()
        if cap is None:
            raise UsageError("cannot evaluate an empty radial series without a cap")
        acc = TruncatedSeries.zero(self.num_vars, cap, self.backend)
        lg = math.log(xval)
        for (k, p), c in self.terms.items():
            w = xval ** k * (lg if p else 1.0)
            acc = acc + TruncatedSeries(self.num_vars, c.cap, self.backend,
                                        {e: w * v for e, v in c.coeffs.items()})
        return acc

    def __repr__(self):
        if not self.terms:
            return f"<radial 0 (window {self.window})>"
        keys = sorted(self.terms, key=lambda kp: (kp[0], kp[1]))
        bits = [f"x^{k}" + ("*log" if p else "") for k, p in keys[:8]]
        return f"<radial terms {', '.join(bits)} (window {self.window})>"


def radial_reciprocal(a: RadialSeries) -> RadialSeries:
    """Inverse of a radial series whose x^0 part has an invertible constant."""
    c0 = a.terms.get((0, 0))
    if c0 is None:
        raise DegenerateMetricError("radial series has no x^0 part; cannot invert")
    if a.window is INF:
        raise UsageError("radial reciprocal needs a finite working window")
    base = RadialSeries.from_chart(c0.reciprocal(), window=a.window)
    u = a * base - RadialSeries.from_chart(
        TruncatedSeries.constant(1, a.num_vars, c0.cap, a.backend), window=a.window)
    one = RadialSeries.from_chart(
        TruncatedSeries.constant(1, a.num_vars, c0.cap, a.backend), window=a.window)
    acc, term = one, one
    nu = -u
    for _ in range(int(a.window) + 1):
        term = term.mul(nu, window=a.window)
        if term.is_zero():
            break
        acc = acc + term
    return acc.mul(base, window=a.window)


def radial_sqrt(a: RadialSeries) -> RadialSeries:
    """Square root of a radial series (x^0 part must have an exact sqrt)."""
    c0 = a.terms.get((0, 0))
    if c0 is None:
        raise UsageError("radial sqrt needs a nonzero x^0 part")
    if a.window is INF:
        raise UsageError("radial sqrt needs a finite working window")
    t = RadialSeries.from_chart(c0.sqrt(), window=a.window)
    half = Fraction(1, 2)
    steps = 2 + int(a.window).bit_length() if a.window > 0 else 2
    for _ in range(steps):
        t = ((t + a.mul(radial_reciprocal(t), window=a.window)).scale(half))
        if (t.mul(t, window=a.window) - a).is_zero():
            break
    return t


def matrix_inverse_radial(G, base_inverse=None):
    """Inverse of a matrix of RadialSeries with invertible x^0 part.

    ``base_inverse`` may supply the already-known inverse of the x^0
    chart-series matrix (it is the boundary metric inverse in practice).
    """
    n = len(G)
    window = min(g.window for row in G for g in row)
    if window is INF:
        raise UsageError("radial matrix inverse needs a finite working window")
    sample = next(c for row in G for g in row for c in g.terms.values())
    nv, bk = sample.num_vars, sample.backend
    cap = min((g.chart_cap() for row in G for g in row if g.chart_cap() is not None))
    if base_inverse is None:
        g0 = [[G[i][j].coefficient(0, 0, cap) for j in range(n)] for i in range(n)]
        base_inverse = matrix_inverse_series(g0)
    B = [[RadialSeries.from_chart(base_inverse[i][j], window=window) for j in range(n)]
         for i in range(n)]

    def mat_mul_w(A, C):
        return [[_sum_terms([A[i][k].mul(C[k][j], window=window) for k in range(n)])
                 for j in range(n)] for i in range(n)]

    M = mat_mul_w(B, [[G[i][j].truncate_window(window) for j in range(n)] for i in range(n)])
    one = RadialSeries.from_chart(TruncatedSeries.constant(1, nv, cap, bk), window=window)
    zero = RadialSeries.zero(nv, bk, window=window)
    N = [[(one if i == j else zero) - M[i][j] for j in range(n)] for i in range(n)]
    acc = [[one if i == j else zero for j in range(n)] for i in range(n)]
    term = acc
    for _ in range(int(window) + 1):
        term = mat_mul_w(N, term)
        if all(t.is_zero() for row in term for t in row):
            break
        acc = [[acc[i][j] + term[i][j] for j in range(n)] for i in range(n)]
    return mat_mul_w(acc, B)


def radial_det(G):
    """Determinant of a matrix of ring elements by first-row minor expansion."""
    n = len(G)
    memo = {}

    def minor(rows: tuple, cols: tuple):
        if len(rows) == 1:
            return G[rows[0]][cols[0]]
        key = (rows, cols)
        got = memo.get(key)
        if got is not None:
            return got
        r0 = rows[0]
        acc = None
        for t, c in enumerate(cols):
            sub = minor(rows[1:], cols[:t] + cols[t + 1:])
            term = G[r0][c] * sub
            if t % 2:
                term = -term
            acc = term if acc is None else acc + term
        memo[key] = acc
        return acc

    idx = tuple(range(n))
    return minor(idx, idx)
