"""Ready-made metric jets: flat space, round spheres, conformally flat
metrics, block products, and seeded random jets for exactness testing.

The sphere of Einstein constant ``lam`` (``Ric = 4 lam (n-1) g``) is carried
in its conformal chart ``g_ij = (1 + lam |x|^2)^(-2) delta_ij``, which gives
exact rational jets at the origin for rational ``lam``; ``lam = 1/4`` is the
unit round sphere.
"""

from __future__ import annotations

import random
from fractions import Fraction

from . import backend as be
from .errors import UsageError
from .series import TruncatedSeries
from .tensor import MetricJet, TensorJet


def flat_metric(n: int, cap: int, backend: str = "rational",
                num_vars: int | None = None) -> MetricJet:
    nv = num_vars or n
    one = TruncatedSeries.constant(1, nv, cap, backend)
    zero = TruncatedSeries.zero(nv, cap, backend)
    rows = [[one if i == j else zero for j in range(n)] for i in range(n)]
    return MetricJet(TensorJet.from_matrix(rows))


def sphere_metric(n: int, cap: int, lam=Fraction(1, 4),
                  backend: str = "rational") -> MetricJet:
    """Round sphere with Ric = 4 lam (n-1) g, in its conformal chart."""
    if isinstance(lam, float) and backend == "rational":
        raise UsageError("rational sphere jets need a rational lambda")
    q = TruncatedSeries.zero(n, cap, backend)
    for i in range(n):
        x = TruncatedSeries.variable(i, n, cap, backend)
        q = q + x * x
    factor = _inverse_square_one_plus(q.scale(lam))
    zero = TruncatedSeries.zero(n, cap, backend)
    rows = [[factor if i == j else zero for j in range(n)] for i in range(n)]
    return MetricJet(TensorJet.from_matrix(rows))


def _inverse_square_one_plus(u: TruncatedSeries) -> TruncatedSeries:
    """(1 + u)^(-2) = sum (-1)^k (k+1) u^k, truncated."""
    acc = TruncatedSeries.constant(1, u.num_vars, u.cap, u.backend)
    term = acc
    for k in range(1, u.cap + 1):
        term = term * u
        if term.is_zero():
            break
        acc = acc + term.scale((-1) ** k * (k + 1))
    return acc


def conformally_flat_metric(phi: TruncatedSeries, dim: int | None = None) -> MetricJet:
    """g = exp(2 phi) delta on ``dim`` coordinates (phi(0) = 0 on rationals)."""
    n = dim or phi.num_vars
    factor = phi.scale(2).exp()
    zero = TruncatedSeries.zero(phi.num_vars, phi.cap, phi.backend)
    rows = [[factor if i == j else zero for j in range(n)] for i in range(n)]
    return MetricJet(TensorJet.from_matrix(rows))


def embed_series(s: TruncatedSeries, total_vars: int, offset: int) -> TruncatedSeries:
    """Re-index a series into a larger variable space at ``offset``."""
    if offset + s.num_vars > total_vars:
        raise UsageError("embedding exceeds the total variable count")
    coeffs = {}
    for e, c in s.coeffs.items():
        key = (0,) * offset + e + (0,) * (total_vars - offset - s.num_vars)
        coeffs[key] = c
    return TruncatedSeries(total_vars, s.cap, s.backend, coeffs)


def product_metric(factors) -> MetricJet:
    """Block-diagonal product of metric jets, each over its own chart block."""
    dims = [f.dim for f in factors]
    n = sum(dims)
    sample = factors[0].g.zero_component()
    cap = min(
        min(c.cap for c in f.g.components.values()) for f in factors)
    bk = sample.backend
    zero = TruncatedSeries.zero(n, cap, bk)
    rows = [[zero for _ in range(n)] for _ in range(n)]
    off = 0
    for f in factors:
        for i in range(f.dim):
            for j in range(f.dim):
                comp = f.g.get((i, j))
                if comp.is_zero():
                    continue
                rows[off + i][off + j] = embed_series(comp.truncate(cap), n, off)
        off += f.dim
    return MetricJet(TensorJet.from_matrix(rows))


# ---------------------------------------------------------------------------
# seeded random jets
# ---------------------------------------------------------------------------

def _random_series(rng: random.Random, n: int, cap: int, backend: str,
                   terms: int, num_vars: int | None = None,
                   min_degree: int = 1, scale=Fraction(1, 8)) -> TruncatedSeries:
    nv = num_vars or n
    coeffs = {}
    for _ in range(terms):
        deg = rng.randint(min_degree, max(min_degree, cap))
        exps = [0] * nv
        for _ in range(deg):
            exps[rng.randrange(n)] += 1
        q = Fraction(rng.randint(-9, 9), rng.randint(7, 23)) * Fraction(scale)
        if q == 0:
            continue
        key = tuple(exps)
        coeffs[key] = coeffs.get(key, be.coerce(backend, 0)) + be.coerce(backend, q)
    return TruncatedSeries(nv, cap, backend, coeffs)


def random_metric_jet(n: int, cap: int, seed: int, backend: str = "rational",
                      terms: int = 2, scale=Fraction(1, 8),
                      num_vars: int | None = None) -> MetricJet:
    """delta plus a sparse random symmetric jet; positive definite near 0."""
    rng = random.Random(seed)
    nv = num_vars or n
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            s = _random_series(rng, n, cap, backend, terms, nv, 1, scale)
            if i == j:
                s = s + TruncatedSeries.constant(1, nv, cap, backend)
            rows[i][j] = rows[j][i] = s
    return MetricJet(TensorJet.from_matrix(rows))


def random_symmetric_field(n: int, cap: int, seed: int, backend: str = "rational",
                           terms: int = 2, scale=Fraction(1, 8),
                           num_vars: int | None = None,
                           min_degree: int = 0) -> TensorJet:
    """A sparse random symmetric rank-2 covariant jet (a metric perturbation)."""
    rng = random.Random(seed)
    nv = num_vars or n
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = _random_series(
                rng, n, cap, backend, terms, nv, min_degree, scale)
    return TensorJet.from_matrix(rows)


def random_conformal_factor(n: int, cap: int, seed: int, backend: str = "rational",
                            terms: int = 2, base=1,
                            scale=Fraction(1, 10)) -> TruncatedSeries:
    """A positive random jet Omega = base + (sparse series vanishing at 0)."""
    rng = random.Random(seed)
    s = _random_series(rng, n, cap, backend, terms, None, 1, scale)
    return s + TruncatedSeries.constant(base, n, cap, backend)


def scale_metric(g: MetricJet, omega2: TruncatedSeries) -> MetricJet:
    """The conformally rescaled metric Omega^2 g given Omega^2 as a jet."""
    return MetricJet(g.g.map_components(lambda c: c * omega2))
