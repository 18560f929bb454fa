"""Tensor jets: indexed arrays of series with variance and symmetry.

Components are stored only for canonical index tuples (lexicographically
minimal within each symmetry orbit); reads of non-canonical tuples apply
the symmetry permutation and sign.  Elements may be chart series
(:class:`~fgjet.series.TruncatedSeries`) or radial series
(:class:`~fgjet.series.RadialSeries`); every operation here uses only ring
arithmetic plus spatial partials, so the same code drives both.

Index conventions: ``variance`` is a string of ``'d'``/``'u'`` per slot.
Symmetry descriptors are tuples of ``(kind, slots)`` with kind one of
``"sym"``, ``"antisym"``, ``"riemann"`` (four slots: two antisymmetric
pairs exchangeable without sign).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product as iter_product

from . import backend as be
from .errors import DegenerateMetricError, UsageError
from .series import (
    RadialSeries,
    TruncatedSeries,
    matrix_inverse_radial,
    matrix_inverse_series,
)

SYM = "sym"
ANTISYM = "antisym"
RIEMANN = "riemann"


def _perm_sign(values) -> int:
    """Sign of the permutation sorting ``values``; 0 on a repeat."""
    vals = list(values)
    sign = 1
    for i in range(len(vals)):
        for j in range(len(vals) - 1, i, -1):
            if vals[j - 1] > vals[j]:
                vals[j - 1], vals[j] = vals[j], vals[j - 1]
                sign = -sign
            elif vals[j - 1] == vals[j]:
                return 0
    return sign


def canonicalize(idx: tuple, symmetry) -> tuple:
    """Return (canonical index tuple, sign); sign 0 if forced to vanish."""
    idx = list(idx)
    sign = 1
    for kind, slots in symmetry:
        if kind == SYM:
            vals = sorted(idx[s] for s in slots)
            for s, v in zip(slots, vals):
                idx[s] = v
        elif kind == ANTISYM:
            vals = [idx[s] for s in slots]
            sg = _perm_sign(vals)
            if sg == 0:
                return tuple(idx), 0
            sign *= sg
            for s, v in zip(slots, sorted(vals)):
                idx[s] = v
        elif kind == RIEMANN:
            a, b, c, d = slots
            if idx[a] == idx[b] or idx[c] == idx[d]:
                return tuple(idx), 0
            if idx[a] > idx[b]:
                idx[a], idx[b] = idx[b], idx[a]
                sign = -sign
            if idx[c] > idx[d]:
                idx[c], idx[d] = idx[d], idx[c]
                sign = -sign
            if (idx[a], idx[b]) > (idx[c], idx[d]):
                idx[a], idx[b], idx[c], idx[d] = idx[c], idx[d], idx[a], idx[b]
        else:
            raise UsageError(f"unknown symmetry kind {kind!r}")
    return tuple(idx), sign


def canonical_indices(dim: int, rank: int, symmetry):
    """All canonical index tuples (those not killed by antisymmetry)."""
    for idx in iter_product(range(dim), repeat=rank):
        can, sign = canonicalize(idx, symmetry)
        if sign != 0 and can == idx:
            yield idx


class TensorJet:
    """Immutable indexed tensor with series components."""

    __slots__ = ("dim", "rank", "variance", "symmetry", "components", "_zero")

    def __init__(self, dim: int, variance: str, symmetry, components: dict, zero):
        self.dim = dim
        self.rank = len(variance)
        self.variance = variance
        self.symmetry = tuple((k, tuple(s)) for k, s in symmetry)
        self.components = {k: v for k, v in components.items() if not v.is_zero()}
        self._zero = zero

    @classmethod
    def build(cls, dim: int, variance: str, symmetry, fn, zero) -> "TensorJet":
        comps = {}
        for idx in canonical_indices(dim, len(variance), symmetry):
            comps[idx] = fn(idx)
        return cls(dim, variance, symmetry, comps, zero)

    @classmethod
    def from_matrix(cls, rows, variance="dd", symmetry=((SYM, (0, 1)),)) -> "TensorJet":
        dim = len(rows)
        zero = rows[0][0].zero_like()
        comps = {}
        for idx in canonical_indices(dim, 2, symmetry):
            comps[idx] = rows[idx[0]][idx[1]]
        return cls(dim, variance, symmetry, comps, zero)

    # -- access ---------------------------------------------------------

    def get(self, idx: tuple):
        can, sign = canonicalize(idx, self.symmetry)
        if sign == 0:
            return self._zero
        comp = self.components.get(can)
        if comp is None:
            return self._zero
        return comp if sign == 1 else -comp

    def zero_component(self):
        return self._zero

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components.values())

    def matrix(self):
        """Rank-2 tensors as a dense list-of-lists."""
        if self.rank != 2:
            raise UsageError("matrix() is for rank-2 tensors")
        return [[self.get((i, j)) for j in range(self.dim)] for i in range(self.dim)]

    # -- algebra -----------------------------------------------------------

    def _compat(self, other: "TensorJet"):
        if (self.dim, self.variance) != (other.dim, other.variance):
            raise UsageError("tensor shape/variance mismatch")

    def __add__(self, other):
        self._compat(other)
        if self.symmetry == other.symmetry:
            out = dict(self.components)
            for k, v in other.components.items():
                cur = out.get(k)
                out[k] = v if cur is None else cur + v
            return TensorJet(self.dim, self.variance, self.symmetry, out, self._zero)
        sym = common_symmetry(self.symmetry, other.symmetry)
        return TensorJet.build(self.dim, self.variance, sym,
                               lambda idx: self.get(idx) + other.get(idx), self._zero)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return TensorJet(self.dim, self.variance, self.symmetry,
                         {k: -v for k, v in self.components.items()}, self._zero)

    def scale(self, q):
        return TensorJet(self.dim, self.variance, self.symmetry,
                         {k: v.scale(q) for k, v in self.components.items()}, self._zero)

    def mul_elem(self, elem) -> "TensorJet":
        """Multiply every component by a ring element (a scalar field)."""
        return TensorJet(self.dim, self.variance, self.symmetry,
                         {k: v * elem for k, v in self.components.items()}, self._zero)

    def map_components(self, fn, zero=None) -> "TensorJet":
        return TensorJet(self.dim, self.variance, self.symmetry,
                         {k: fn(v) for k, v in self.components.items()},
                         fn(self._zero) if zero is None else zero)

    def same_as(self, other: "TensorJet") -> bool:
        """Componentwise equality over the full (non-canonical) index space."""
        self._compat(other)
        for idx in iter_product(range(self.dim), repeat=self.rank):
            if not (self.get(idx) - other.get(idx)).is_zero():
                return False
        return True

    def __repr__(self):
        return (f"<TensorJet rank {self.rank} variance {self.variance} "
                f"dim {self.dim}, {len(self.components)} stored>")


def common_symmetry(sa, sb):
    """Largest shared symmetry description (intersection by equality)."""
    return tuple(g for g in sa if g in sb)


def _remap_symmetry(symmetry, kept_slots):
    """Re-index symmetry groups after removing slots; drop groups touching them."""
    pos = {s: i for i, s in enumerate(kept_slots)}
    out = []
    for kind, slots in symmetry:
        if all(s in pos for s in slots):
            out.append((kind, tuple(pos[s] for s in slots)))
    return tuple(out)


# ---------------------------------------------------------------------------
# metric
# ---------------------------------------------------------------------------

class MetricJet:
    """A symmetric covariant rank-2 jet with cached inverse and Christoffel data.

    Positive-definiteness at the base point is established at construction
    time via the (pivot) signs of the Gauss factorization of ``g(0)``.
    """

    __slots__ = ("g", "dim", "ginv_rows", "ginv", "_gamma", "_xi", "_Xi")

    def __init__(self, g: TensorJet, check_positive: bool = True):
        if g.rank != 2 or g.variance != "dd":
            raise UsageError("metric must be a covariant rank-2 tensor")
        self.g = g
        self.dim = g.dim
        rows = g.matrix()
        if isinstance(rows[0][0], RadialSeries):
            self.ginv_rows = matrix_inverse_radial(rows)
            base = [[rows[i][j].coefficient(0, 0, 0).constant_term()
                     for j in range(self.dim)] for i in range(self.dim)]
            bk = rows[0][0].backend
        else:
            self.ginv_rows = matrix_inverse_series(rows)
            base = [[rows[i][j].constant_term() for j in range(self.dim)]
                    for i in range(self.dim)]
            bk = rows[0][0].backend
        if check_positive:
            _check_positive_definite(base, bk)
        self.ginv = TensorJet.from_matrix(self.ginv_rows, variance="uu")
        self._gamma = None
        self._xi = None
        self._Xi = None

    def christoffel(self) -> TensorJet:
        """Levi-Civita connection coefficients, variance (u, d, d)."""
        if self._gamma is None:
            g, ginv, n = self.g, self.ginv_rows, self.dim
            dg = [[[g.get((i, j)).partial(c) for c in range(n)]
                   for j in range(n)] for i in range(n)]
            half = Fraction(1, 2)

            def entry(idx):
                k, i, j = idx
                acc = None
                for l in range(n):
                    t = dg[j][l][i] + dg[i][l][j] - dg[i][j][l]
                    t = ginv[k][l] * t
                    acc = t if acc is None else acc + t
                return acc.scale(half)

            zero = g.zero_component()
            self._gamma = TensorJet.build(n, "udd", ((SYM, (1, 2)),), entry, zero)
        return self._gamma

    def contracted_christoffel(self):
        """xi^m = g^{ab} Gamma^m_{ab}, cached."""
        if self._xi is None:
            n, gamma = self.dim, self.christoffel()
            xi = []
            for m in range(n):
                acc = None
                for a in range(n):
                    for b in range(n):
                        t = self.ginv_rows[a][b] * gamma.get((m, a, b))
                        acc = t if acc is None else acc + t
                xi.append(acc)
            self._xi = xi
        return self._xi

    def raised_christoffel(self):
        """Xi[b][m][x] = g^{ab} Gamma^m_{ax}, cached."""
        if self._Xi is None:
            n, gamma = self.dim, self.christoffel()
            Xi = [[[None] * n for _ in range(n)] for _ in range(n)]
            for b in range(n):
                for m in range(n):
                    for x in range(n):
                        acc = None
                        for a in range(n):
                            t = self.ginv_rows[a][b] * gamma.get((m, a, x))
                            acc = t if acc is None else acc + t
                        Xi[b][m][x] = acc
            self._Xi = Xi
        return self._Xi


def _check_positive_definite(rows, backend: str):
    """Positive pivots of unpivoted Gauss elimination == positive definite."""
    n = len(rows)
    a = [list(r) for r in rows]
    for col in range(n):
        piv = a[col][col]
        if not _is_positive(piv):
            raise DegenerateMetricError(
                "metric degenerate at base point (not positive definite)")
        for r in range(col + 1, n):
            f = a[r][col] / piv
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]


def _is_positive(v) -> bool:
    if hasattr(v, "shape"):
        import numpy as np
        return bool(np.all(v > 0))
    return v > 0


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def covariant_derivative(T: TensorJet, g: MetricJet) -> TensorJet:
    """Levi-Civita covariant derivative; the new covariant slot is appended."""
    gamma = g.christoffel()
    n = T.dim

    def entry(idx):
        base, c = idx[:-1], idx[-1]
        val = T.get(base).partial(c)
        for s in range(T.rank):
            i_s = base[s]
            acc = None
            for m in range(n):
                swapped = base[:s] + (m,) + base[s + 1:]
                comp = T.get(swapped)
                if comp.is_zero():
                    continue
                gm = gamma.get((m, c, i_s)) if T.variance[s] == "d" \
                    else gamma.get((i_s, c, m))
                t = gm * comp
                acc = t if acc is None else acc + t
            if acc is not None:
                val = val - acc if T.variance[s] == "d" else val + acc
        return val

    zero = _derived_zero(T)
    return TensorJet.build(n, T.variance + "d", T.symmetry, entry, zero)


def _derived_zero(T: TensorJet):
    z = T.zero_component()
    if isinstance(z, TruncatedSeries):
        if z.cap < 1:
            raise UsageError("cannot build a derivative zero below cap 0")
        return TruncatedSeries.zero(z.num_vars, z.cap - 1, z.backend)
    return z


def divergence(T: TensorJet, g: MetricJet, slot: int) -> TensorJet:
    """g^{ab} (nabla_a T)[..., b at `slot`, ...]: covariant derivative with its
    new index raised and contracted against ``slot``.

    All slots of ``T`` must be covariant.  This is the workhorse behind
    Laplacians and divergence-type contractions; contraction happens during
    accumulation so the rank+1 intermediate is never stored.
    """
    if "u" in T.variance:
        raise UsageError("divergence expects a fully covariant tensor")
    n = T.dim
    ginv = g.ginv_rows
    Xi = g.raised_christoffel()
    xi = g.contracted_christoffel()
    kept = [s for s in range(T.rank) if s != slot]

    def entry(out_idx):
        val = None
        for b in range(n):
            full = list(out_idx[:slot]) + [b] + list(out_idx[slot:])
            comp_partials = None
            for a in range(n):
                t = ginv[a][b] * T.get(tuple(full)).partial(a)
                comp_partials = t if comp_partials is None else comp_partials + t
            val = comp_partials if val is None else val + comp_partials
        # correction for the contracted slot: -xi^m T[... m ...]
        for m in range(n):
            full = list(out_idx[:slot]) + [m] + list(out_idx[slot:])
            comp = T.get(tuple(full))
            if comp.is_zero():
                continue
            val = val - xi[m] * comp
        # corrections for the surviving slots: -Xi[b][m][i_s] T[.. m .., b]
        # (rebuilt `full` carries T's slot layout, so slot s sits at position s)
        for pos_out, s in enumerate(kept):
            i_s = out_idx[pos_out]
            for b in range(n):
                for m in range(n):
                    full = list(out_idx[:slot]) + [b] + list(out_idx[slot:])
                    full[s] = m
                    comp = T.get(tuple(full))
                    if comp.is_zero():
                        continue
                    val = val - Xi[b][m][i_s] * comp
        return val

    sym = _remap_symmetry(T.symmetry, kept)
    zero = _derived_zero(T)
    return TensorJet.build(n, "d" * (T.rank - 1), sym, entry, zero)


def trace(T: TensorJet, g: MetricJet, slots: tuple) -> TensorJet:
    """Contract a slot pair, inserting the metric or its inverse as needed."""
    a, b = slots
    if not (0 <= a < T.rank and 0 <= b < T.rank) or a == b:
        raise UsageError(f"invalid slot pair {slots}")
    if a > b:
        a, b = b, a
    n = T.dim
    va, vb = T.variance[a], T.variance[b]
    kept = [s for s in range(T.rank) if s not in (a, b)]
    weight = None if va != vb else (g.ginv_rows if va == "d" else g.g.matrix())

    def entry(out_idx):
        def full(k, l):
            idx = list(out_idx)
            idx.insert(a, k)
            idx.insert(b, l)
            return tuple(idx)

        acc = None
        if weight is None:
            for k in range(n):
                t = T.get(full(k, k))
                if t.is_zero():
                    continue
                acc = t if acc is None else acc + t
        else:
            for k in range(n):
                for l in range(n):
                    comp = T.get(full(k, l))
                    if comp.is_zero():
                        continue
                    t = weight[k][l] * comp
                    acc = t if acc is None else acc + t
        return acc if acc is not None else T.zero_component()

    sym = _remap_symmetry(T.symmetry, kept)
    variance = "".join(T.variance[s] for s in kept)
    return TensorJet.build(n, variance, sym, entry, T.zero_component())


def trace_free_part(S: TensorJet, g: MetricJet) -> TensorJet:
    """S minus (tr S / n) g for symmetric covariant rank-2 S."""
    if S.rank != 2 or S.variance != "dd":
        raise UsageError("trace_free_part expects a covariant rank-2 tensor")
    tr = trace(S, g, (0, 1)).get(())
    correction = g.g.mul_elem(tr.scale(Fraction(1, S.dim)))
    return S - correction


def raise_index(T: TensorJet, g: MetricJet, slot: int) -> TensorJet:
    return _flip_index(T, g, slot, to="u")


def lower_index(T: TensorJet, g: MetricJet, slot: int) -> TensorJet:
    return _flip_index(T, g, slot, to="d")


def _flip_index(T: TensorJet, g: MetricJet, slot: int, to: str) -> TensorJet:
    if not 0 <= slot < T.rank:
        raise UsageError(f"invalid slot {slot}")
    if T.variance[slot] == to:
        raise UsageError(f"slot {slot} already has variance {to!r}")
    n = T.dim
    weight = g.ginv_rows if to == "u" else g.g.matrix()

    def entry(idx):
        k = idx[slot]
        acc = None
        for m in range(n):
            comp = T.get(idx[:slot] + (m,) + idx[slot + 1:])
            if comp.is_zero():
                continue
            t = weight[k][m] * comp
            acc = t if acc is None else acc + t
        return acc if acc is not None else T.zero_component()

    variance = T.variance[:slot] + to + T.variance[slot + 1:]
    sym = tuple(gsym for gsym in T.symmetry if slot not in gsym[1])
    return TensorJet.build(n, variance, sym, entry, T.zero_component())


def tensor_from_scalar(value, like: TensorJet) -> TensorJet:
    """Rank-0 wrapper so scalars can ride through generic code when needed."""
    return TensorJet(like.dim, "", (), {(): value}, like.zero_component())
