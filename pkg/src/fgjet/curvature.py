"""Curvature of a metric jet: Riemann/Ricci/scalar, Schouten, Weyl, Cotton,
Bach, the dimension-4 Q-curvature, and the closed-form obstruction tensors
in dimensions 4 and 6.

Sign conventions are fixed so that the unit round sphere has
``Ric = (n-1) g`` and ``R = n (n-1)`` (positive curvature positive).  Comma
derivatives accumulate left to right: ``T,_j{}^k`` means "first take
``nabla_j``, then ``nabla^k``".
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations

from .errors import DegreeCapError, UsageError
from .series import TruncatedSeries, radial_det
from .tensor import (
    ANTISYM,
    RIEMANN,
    SYM,
    MetricJet,
    TensorJet,
    covariant_derivative,
    divergence,
    lower_index,
    raise_index,
    trace,
    trace_free_part,
)


def metric_cap(g: MetricJet) -> int:
    caps = [c.cap for c in g.g.components.values() if isinstance(c, TruncatedSeries)]
    if not caps:
        raise UsageError("metric jet has no chart-series components")
    return min(caps)


def _require_cap(g: MetricJet, need: int, what: str):
    have = metric_cap(g)
    if have < need:
        raise DegreeCapError(f"{what} needs metric degree cap >= {need}, have {have}")


# ---------------------------------------------------------------------------
# core curvature
# ---------------------------------------------------------------------------

def riemann_mixed(g: MetricJet) -> TensorJet:
    """R^r_{s m n} = d_m Gamma^r_{ns} - d_n Gamma^r_{ms} + Gamma Gamma terms.

    Stored with only the manifest antisymmetry in the last slot pair.
    """
    gamma = g.christoffel()
    n = g.dim
    # dG[r][a][b][c] = d_c Gamma^r_{ab}, computed once
    dG = [[[[gamma.get((r, a, b)).partial(c) for c in range(n)]
            for b in range(n)] for a in range(n)] for r in range(n)]

    def entry(idx):
        r, s, m, nn = idx
        val = dG[r][nn][s][m] - dG[r][m][s][nn]
        for lam in range(n):
            t1 = gamma.get((r, m, lam)) * gamma.get((lam, nn, s))
            t2 = gamma.get((r, nn, lam)) * gamma.get((lam, m, s))
            val = val + t1 - t2
        return val

    zero = _chart_zero(g, drop=2)
    return TensorJet.build(n, "uddd", ((ANTISYM, (2, 3)),), entry, zero)


def riemann_lowered(g: MetricJet, mixed: TensorJet | None = None) -> TensorJet:
    """Fully covariant curvature; storage assumes only last-pair antisymmetry.

    The remaining pair symmetries are theorems about the output and are left
    observable (the test suite asserts them exactly).
    """
    if mixed is None:
        mixed = riemann_mixed(g)
    n = g.dim
    grows = g.g.matrix()

    def entry(idx):
        r, s, m, nn = idx
        acc = None
        for lam in range(n):
            comp = mixed.get((lam, s, m, nn))
            if comp.is_zero():
                continue
            t = grows[r][lam] * comp
            acc = t if acc is None else acc + t
        return acc if acc is not None else mixed.zero_component()

    return TensorJet.build(n, "dddd", ((ANTISYM, (2, 3)),), entry,
                           mixed.zero_component())


def ricci(g: MetricJet) -> TensorJet:
    """Ricci tensor R_{sn} = R^m_{s m n}, computed directly from Christoffel."""
    gamma = g.christoffel()
    n = g.dim
    gtr = []  # gamma^m_{m s}
    for s in range(n):
        acc = None
        for m in range(n):
            t = gamma.get((m, m, s))
            acc = t if acc is None else acc + t
        gtr.append(acc)

    def entry(idx):
        s, nn = idx
        acc = None
        for m in range(n):
            t = gamma.get((m, nn, s)).partial(m)
            acc = t if acc is None else acc + t
        acc = acc - gtr[s].partial(nn)
        for lam in range(n):
            acc = acc + gtr[lam] * gamma.get((lam, nn, s))
            for m in range(n):
                acc = acc - gamma.get((m, nn, lam)) * gamma.get((lam, m, s))
        return acc

    zero = _chart_zero(g, drop=2)
    return TensorJet.build(n, "dd", ((SYM, (0, 1)),), entry, zero)


def scalar_curvature(g: MetricJet, ric: TensorJet | None = None):
    if ric is None:
        ric = ricci(g)
    return trace(ric, g, (0, 1)).get(())


def schouten(g: MetricJet, ric=None, scal=None) -> TensorJet:
    """(n-2) P = Ric - R g / (2(n-1))."""
    n = g.dim
    if n < 3:
        raise UsageError("Schouten tensor needs dimension >= 3")
    if ric is None:
        ric = ricci(g)
    if scal is None:
        scal = scalar_curvature(g, ric)
    correction = g.g.mul_elem(scal.scale(Fraction(1, 2 * (n - 1))))
    return (ric - correction).scale(Fraction(1, n - 2))


def weyl(g: MetricJet, riem: TensorJet, P: TensorJet) -> TensorJet:
    """W = Riem - P (kulkarni-nomizu) g, stored with full Riemann symmetry."""
    n = g.dim
    grows = g.g.matrix()

    def entry(idx):
        i, j, k, l = idx
        kn = (grows[i][k] * P.get((j, l)) - grows[i][l] * P.get((j, k))
              + grows[j][l] * P.get((i, k)) - grows[j][k] * P.get((i, l)))
        return riem.get(idx) - kn

    return TensorJet.build(n, "dddd", ((RIEMANN, (0, 1, 2, 3)),), entry,
                           riem.zero_component())


def cotton(g: MetricJet, P: TensorJet) -> TensorJet:
    """C_{ijk} = P_{ij},_k - P_{ik},_j."""
    DP = covariant_derivative(P, g)

    def entry(idx):
        i, j, k = idx
        return DP.get((i, j, k)) - DP.get((i, k, j))

    return TensorJet.build(g.dim, "ddd", ((ANTISYM, (1, 2)),), entry,
                           DP.zero_component())


def _raised_matrix2(T: TensorJet, g: MetricJet):
    """Dense matrix of a rank-2 covariant tensor with both indices raised."""
    n = g.dim
    ginv = g.ginv_rows
    M1 = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = None
            for a in range(n):
                comp = T.get((a, j))
                if comp.is_zero():
                    continue
                t = ginv[i][a] * comp
                acc = t if acc is None else acc + t
            M1[i][j] = acc if acc is not None else T.zero_component()
    M2 = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = None
            for b in range(n):
                if M1[i][b].is_zero():
                    continue
                t = ginv[j][b] * M1[i][b]
                acc = t if acc is None else acc + t
            M2[i][j] = acc if acc is not None else T.zero_component()
    return M2


def _bach_pieces(g: MetricJet, P: TensorJet):
    """(Delta P_ij, nabla^k nabla_j P_ik) as two rank-2 tensors."""
    DP = covariant_derivative(P, g)
    lap = divergence(DP, g, slot=2)       # P_ij,_k{}^k
    mixed = divergence(DP, g, slot=1)     # P_ik,_j{}^k  (slots i, j)
    return lap, mixed


def bach(g: MetricJet, P: TensorJet, W: TensorJet) -> TensorJet:
    """B_ij = P_ij,_k{}^k - P_ik,_j{}^k - P^{kl} W_{kijl}."""
    _require_cap(g, 4, "Bach tensor")
    lap, mixed = _bach_pieces(g, P)
    Pup = _raised_matrix2(P, g)
    n = g.dim

    def entry(idx):
        i, j = idx
        val = lap.get(idx) - mixed.get(idx)
        for k in range(n):
            for l in range(n):
                comp = W.get((k, i, j, l))
                if comp.is_zero() or Pup[k][l].is_zero():
                    continue
                val = val - Pup[k][l] * comp
        return val

    return TensorJet.build(n, "dd", (), entry, lap.zero_component())


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------

class CurvatureSuite:
    """All pointwise curvature objects of one metric jet.

    Members beyond the metric's degree budget are absent; reading one
    raises a :class:`DegreeCapError` naming the shortfall.
    """

    __slots__ = ("metric", "_members", "_missing")

    def __init__(self, metric: MetricJet, members: dict, missing: dict):
        self.metric = metric
        self._members = members
        self._missing = missing

    def _get(self, name: str):
        if name in self._members:
            return self._members[name]
        raise DegreeCapError(self._missing[name])

    @property
    def christoffel(self):
        return self._get("christoffel")

    @property
    def riemann(self):
        return self._get("riemann")

    @property
    def ricci(self):
        return self._get("ricci")

    @property
    def scalar(self):
        return self._get("scalar")

    @property
    def schouten(self):
        return self._get("schouten")

    @property
    def weyl(self):
        return self._get("weyl")

    @property
    def cotton(self):
        return self._get("cotton")

    @property
    def bach(self):
        return self._get("bach")


def curvature_suite(g: MetricJet, need: str = "bach") -> CurvatureSuite:
    """Compute the curvature suite as far as the degree budget allows.

    ``need`` names the deepest member that must exist ("ricci", "weyl",
    "cotton" or "bach"); a shortfall below it raises immediately, members
    beyond it are included when the cap suffices.
    """
    order = {"ricci": 2, "weyl": 2, "cotton": 3, "bach": 4}
    if need not in order:
        raise UsageError(f"unknown suite depth {need!r}")
    cap = metric_cap(g)
    if cap < order[need]:
        raise DegreeCapError(
            f"curvature suite through {need} needs metric degree cap >= "
            f"{order[need]}, have {cap}")

    members: dict = {}
    missing: dict = {}
    members["christoffel"] = g.christoffel()
    ric = ricci(g)
    members["ricci"] = ric
    scal = scalar_curvature(g, ric)
    members["scalar"] = scal
    P = schouten(g, ric, scal)
    members["schouten"] = P

    riem_partial = riemann_lowered(g)
    riem = TensorJet.build(g.dim, "dddd", ((RIEMANN, (0, 1, 2, 3)),),
                           riem_partial.get, riem_partial.zero_component())
    members["riemann"] = riem
    W = weyl(g, riem, P)
    members["weyl"] = W

    if cap >= 3:
        members["cotton"] = cotton(g, P)
    else:
        missing["cotton"] = f"Cotton tensor needs metric degree cap >= 3, have {cap}"
    if cap >= 4:
        members["bach"] = bach(g, P, W)
    else:
        missing["bach"] = f"Bach tensor needs metric degree cap >= 4, have {cap}"
    return CurvatureSuite(g, members, missing)


# ---------------------------------------------------------------------------
# derived operations
# ---------------------------------------------------------------------------

def laplacian_scalar(f, g: MetricJet):
    """Delta f = g^{ab} (d_a d_b f - Gamma^m_{ab} d_m f)."""
    n = g.dim
    ginv = g.ginv_rows
    xi = g.contracted_christoffel()
    df = [f.partial(a) for a in range(n)]
    acc = None
    for a in range(n):
        for b in range(n):
            t = ginv[a][b] * df[a].partial(b)
            acc = t if acc is None else acc + t
    for m in range(n):
        acc = acc - xi[m] * df[m]
    return acc


def covariant_hessian(f, g: MetricJet) -> TensorJet:
    """nabla_j nabla_i f as a symmetric rank-2 tensor."""
    n = g.dim
    gamma = g.christoffel()
    df = [f.partial(a) for a in range(n)]

    def entry(idx):
        i, j = idx
        val = df[i].partial(j)
        for m in range(n):
            val = val - gamma.get((m, j, i)) * df[m]
        return val

    zero = _chart_zero(g, drop=2)
    return TensorJet.build(n, "dd", ((SYM, (0, 1)),), entry, zero)


def weyl_divergence_check(suite: CurvatureSuite):
    """Both sides of W_{kijl},^{kl} = (3-n)(P_ij,_k{}^k - P_ik,_j{}^k)."""
    g = suite.metric
    _require_cap(g, 4, "Weyl divergence identity")
    W, P = suite.weyl, suite.schouten
    D1 = divergence(W, g, slot=0)          # nabla^k W_{kijl} -> slots (i, j, l)
    lhs = divergence(D1, g, slot=2)        # then nabla^l -> slots (i, j)
    lap, mixed = _bach_pieces(g, P)
    rhs = (lap - mixed).scale(3 - g.dim)
    return lhs, rhs


def linearized_ricci(h: TensorJet, g: MetricJet) -> TensorJet:
    """First variation of Ricci at g in direction h:

    Ric'_{ij} = (h_{ik},_j{}^k + h_{jk},_i{}^k - h_{ij},_k{}^k - h_k{}^k,_{ij}) / 2
    """
    if h.rank != 2 or h.variance != "dd":
        raise UsageError("perturbation must be a covariant rank-2 tensor")
    DH = covariant_derivative(h, g)
    t1 = divergence(DH, g, slot=1)         # h_{ik},_j{}^k on slots (i, j)
    t3 = divergence(DH, g, slot=2)         # h_{ij},_k{}^k
    trh = trace(h, g, (0, 1)).get(())
    t4 = covariant_hessian(trh, g)
    half = Fraction(1, 2)

    def entry(idx):
        i, j = idx
        return (t1.get((i, j)) + t1.get((j, i)) - t3.get((i, j)) - t4.get((i, j))) \
            .scale(half)

    return TensorJet.build(g.dim, "dd", ((SYM, (0, 1)),), entry, t1.zero_component())


def q4(g: MetricJet, suite: CurvatureSuite | None = None):
    """Pointwise Q-curvature in dimension 4: 6 Q = -Delta R + R^2 - 3 |Ric|^2."""
    if g.dim != 4:
        raise UsageError("q4 is defined for dimension 4 only")
    _require_cap(g, 4, "Q-curvature")
    if suite is None:
        ric = ricci(g)
        scal = scalar_curvature(g, ric)
    else:
        ric, scal = suite.ricci, suite.scalar
    lap_R = laplacian_scalar(scal, g)
    # |Ric|^2 via the mixed endomorphism: sum_ij M[i][j] M[j][i]
    n = g.dim
    ginv = g.ginv_rows
    zero = ric.zero_component()
    M = [[zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = None
            for a in range(n):
                comp = ric.get((a, j))
                if comp.is_zero():
                    continue
                t = ginv[i][a] * comp
                acc = t if acc is None else acc + t
            if acc is not None:
                M[i][j] = acc
    ric2 = zero
    for i in range(n):
        for j in range(n):
            if M[i][j].is_zero() or M[j][i].is_zero():
                continue
            ric2 = ric2 + M[i][j] * M[j][i]
    return (scal * scal - lap_R - ric2.scale(3)).scale(Fraction(1, 6))


def obstruction_closed_form(suite: CurvatureSuite, n: int) -> TensorJet:
    """The explicit obstruction tensor for n = 4 (Bach) and n = 6."""
    g = suite.metric
    if n != g.dim:
        raise UsageError(f"dimension mismatch: suite is {g.dim}-dimensional, asked for n={n}")
    if n == 4:
        return suite.bach
    if n != 6:
        raise UsageError(f"no closed form for n={n}; use the FG solver path")
    _require_cap(g, 6, "dimension-6 obstruction tensor")
    B, W, P, C = suite.bach, suite.weyl, suite.schouten, suite.cotton
    trP = trace(P, g, (0, 1)).get(())
    ginv = g.ginv_rows

    DB = covariant_derivative(B, g)
    lapB = divergence(DB, g, slot=2)                        # B_ij,_k{}^k
    Bup = _raised_matrix2(B, g)
    Pup = _raised_matrix2(P, g)

    DC = covariant_derivative(C, g)                          # C_{ijk},_l
    CU = raise_index(raise_index(C, g, 0), g, 2)             # C^k{}_i{}^l
    CV = raise_index(raise_index(C, g, 1), g, 2)             # C_i{}^{kl}

    # P^k_m P^{ml} with the last index raised: (ginv P ginv P ginv)
    Pmix = _mat_ring_mul(ginv, _tensor_matrix(P))            # P^a_b
    PP = _mat_ring_mul(_mat_ring_mul(Pmix, Pmix), ginv)      # (P^2)^{kl}

    dtrP = [trP.partial(l) for l in range(n)]
    half = Fraction(1, 2)

    def entry(idx):
        i, j = idx
        val = lapB.get((i, j))
        val = val - trP * B.get((i, j)).scale(4)
        for k in range(n):
            for l in range(n):
                Wk = W.get((k, i, j, l))
                if not Wk.is_zero():
                    val = val - (Bup[k][l].scale(2) + PP[k][l].scale(4)) * Wk
                # 8 P^{kl} C_{(ij)k},_l
                sder = (DC.get((i, j, k, l)) + DC.get((j, i, k, l))).scale(half)
                if not sder.is_zero():
                    val = val + Pup[k][l].scale(8) * sder
                # -4 C^k_i^l C_{ljk} + 2 C_i^{kl} C_{jkl}
                val = val - CU.get((k, i, l)).scale(4) * C.get((l, j, k))
                val = val + CV.get((i, k, l)).scale(2) * C.get((j, k, l))
        # + 4 (tr P),_l C_{(ij)}{}^l
        for l in range(n):
            for b in range(n):
                cs = (C.get((i, j, b)) + C.get((j, i, b))).scale(half)
                if cs.is_zero():
                    continue
                val = val + (dtrP[l] * ginv[l][b]).scale(4) * cs
        return val

    return TensorJet.build(n, "dd", (), entry, lapB.zero_component())


def _tensor_matrix(T: TensorJet):
    return [[T.get((i, j)) for j in range(T.dim)] for i in range(T.dim)]


def _mat_ring_mul(A, B):
    n = len(A)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = None
            for k in range(n):
                if A[i][k].is_zero() or B[k][j].is_zero():
                    continue
                t = A[i][k] * B[k][j]
                acc = t if acc is None else acc + t
            out[i][j] = acc if acc is not None else A[0][0].zero_like()
    return out


# ---------------------------------------------------------------------------
# Hodge split (n = 4)
# ---------------------------------------------------------------------------

def hodge_star_first_pair(T: TensorJet, g: MetricJet, orientation: int = 1) -> TensorJet:
    """Apply the Hodge star to the first antisymmetric index pair (n=4)."""
    n = g.dim
    if n != 4:
        raise UsageError("Hodge star on 2-forms requires dimension 4")
    if orientation not in (1, -1):
        raise UsageError("orientation must be +1 or -1")
    grows = g.g.matrix()
    det = radial_det(grows)
    sqrtdet = det.sqrt().scale(orientation)
    ginv = g.ginv_rows
    # eps with upper pair: EU[i][j][p][q] = eps_{ijab} g^{ap} g^{bq}
    sign = {perm: _perm_parity(perm) for perm in permutations(range(4))}

    def eps_up(i, j, p, q):
        acc = None
        for a in range(4):
            for b in range(4):
                s = sign.get((i, j, a, b))
                if not s:
                    continue
                t = (ginv[a][p] * ginv[b][q]).scale(s)
                acc = t if acc is None else acc + t
        return acc * sqrtdet if acc is not None else None

    EU = [[[[eps_up(i, j, p, q) for q in range(4)] for p in range(4)]
           for j in range(4)] for i in range(4)]
    half = Fraction(1, 2)

    def entry(idx):
        i, j, k, l = idx
        acc = None
        for p in range(4):
            for q in range(4):
                comp = T.get((p, q, k, l))
                if comp.is_zero():
                    continue
                e = EU[i][j][p][q]
                if e is None:
                    continue
                t = e * comp
                acc = t if acc is None else acc + t
        return acc.scale(half) if acc is not None else T.zero_component()

    return TensorJet.build(4, "dddd", ((ANTISYM, (0, 1)), (ANTISYM, (2, 3))),
                           entry, T.zero_component())


def _perm_parity(perm) -> int:
    seen = list(perm)
    sign = 1
    for i in range(len(seen)):
        for j in range(len(seen) - 1, i, -1):
            if seen[j - 1] > seen[j]:
                seen[j - 1], seen[j] = seen[j], seen[j - 1]
                sign = -sign
    return sign


def weyl_selfdual_split(suite: CurvatureSuite, orientation: int = 1):
    """(W+, W-) with W = W+ + W- and star W(+/-) = (+/-) W(+/-)."""
    g = suite.metric
    if g.dim != 4:
        raise UsageError("self-dual split requires dimension 4")
    W = suite.weyl
    SW = hodge_star_first_pair(W, g, orientation)
    half = Fraction(1, 2)
    Wp = (W + SW).scale(half)
    Wm = (W - SW).scale(half)
    return Wp, Wm


def _chart_zero(g: MetricJet, drop: int):
    z = g.g.zero_component()
    if isinstance(z, TruncatedSeries):
        if z.cap < drop:
            raise DegreeCapError(
                f"operation needs metric degree cap >= {drop}, have {z.cap}")
        return TruncatedSeries.zero(z.num_vars, z.cap - drop, z.backend)
    return z
