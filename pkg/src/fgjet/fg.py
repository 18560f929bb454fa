"""Order-by-order solution of the radial Einstein expansion.

For a boundary metric jet ``g`` the radial family ``g_x`` solves
``Ric(g_+) + n g_+ = 0`` order by order for ``g_+ = x^{-2}(dx^2 + g_x)``.
Writing ``E = Ric(g_+) + n g_+``, the tangential block satisfies

    2 x E_ij = -x g_ij'' + x g^{kl} g_ik' g_jl' - (x/2) g^{kl} g_kl' g_ij'
               + (n-1) g_ij' + g^{kl} g_kl' g_ij + 2 x Ric(g_x)_ij

with ``' = d/dx`` and Ricci taken at fixed x.  Requiring the x^(s-1)
coefficient to vanish determines the Taylor coefficient g^(s) through the
invertible map  a -> (n-s) a + tr(a) g  for s < n.  At s = n only the trace
survives; the trace-free remainder is the obstruction tensor, and the
matching log coefficient makes the residual vanish one order further.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .curvature import metric_cap, ricci
from .errors import DegreeCapError, UsageError
from .series import INF, RadialSeries, TruncatedSeries
from .tensor import (
    SYM,
    MetricJet,
    TensorJet,
    covariant_derivative,
    divergence,
)


@dataclass(frozen=True)
class Constants:
    """Normalization constants of the obstruction/Q-curvature pairing."""

    n: int
    c_n: Fraction
    k_n: Fraction


def constants(n: int) -> Constants:
    """c_n = 2^(n-2) ((n/2-1)!)^2 / (n-2),  k_n = (-1)^(n/2) n (n-2) c_n."""
    if n < 4 or n % 2:
        raise UsageError(f"constants are defined for even n >= 4, got {n}")
    c = Fraction(2 ** (n - 2) * math.factorial(n // 2 - 1) ** 2, n - 2)
    k = Fraction((-1) ** (n // 2) * n * (n - 2)) * c
    return Constants(n, c, k)


# ---------------------------------------------------------------------------
# radial assembly and the Einstein residual
# ---------------------------------------------------------------------------

def assemble_radial_metric(g: MetricJet, coeffs: dict, window,
                           log_coeffs: dict | None = None) -> TensorJet:
    """Radial metric tensor from Taylor coefficients (and log coefficients).

    ``coeffs[m]`` is the coefficient of x^m, ``log_coeffs[m]`` of x^m log x;
    the x^0 term is the boundary metric itself.
    """
    zc = g.g.zero_component()
    nv, bk = zc.num_vars, zc.backend

    def entry(idx):
        terms = {}
        base = g.g.get(idx)
        if not base.is_zero():
            terms[(0, 0)] = base
        for m, T in coeffs.items():
            c = T.get(idx)
            if not c.is_zero():
                terms[(m, 0)] = c
        if log_coeffs:
            for m, T in log_coeffs.items():
                c = T.get(idx)
                if not c.is_zero():
                    terms[(m, 1)] = c
        return RadialSeries(nv, bk, window, terms)

    zero = RadialSeries.zero(nv, bk, window)
    return TensorJet.build(g.dim, "dd", ((SYM, (0, 1)),), entry, zero)


def _radial_metric_jet(gx: TensorJet, window=None) -> MetricJet:
    if window is not None:
        gx = gx.map_components(lambda c: c.truncate_window(window))
    return MetricJet(gx)


def _tangential_residual_2x(gx: TensorJet, n: int, ric_window) -> TensorJet:
    """2 x E_ij of the radial metric, as a radial tensor."""
    gxM = MetricJet(gx)
    dim = gx.dim
    ginv = gxM.ginv_rows
    gp = gx.map_components(lambda c: c.x_derivative())
    gpp = gp.map_components(lambda c: c.x_derivative())

    trgp = None
    for k in range(dim):
        for l in range(dim):
            t = ginv[k][l] * gp.get((k, l))
            trgp = t if trgp is None else trgp + t

    # H[i][l] = g^{kl} g'_ik  (one index of g' raised)
    H = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        for l in range(dim):
            acc = None
            for k in range(dim):
                comp = gp.get((i, k))
                if comp.is_zero():
                    continue
                t = ginv[k][l] * comp
                acc = t if acc is None else acc + t
            H[i][l] = acc

    ric_t = None
    if ric_window is not None and ric_window >= 0:
        ric_t = ricci(_radial_metric_jet(gx, window=ric_window))

    def entry(idx):
        i, j = idx
        val = gp.get(idx).scale(n - 1) - gpp.get(idx).x_shift(1)
        quad = None
        for l in range(dim):
            a = H[i][l]
            b = gp.get((j, l))
            if a is None or a.is_zero() or b.is_zero():
                continue
            t = a * b
            quad = t if quad is None else quad + t
        if quad is not None:
            val = val + quad.x_shift(1)
        if trgp is not None and not trgp.is_zero():
            val = val + trgp * gx.get(idx)
            val = val - (trgp * gp.get(idx)).x_shift(1).scale(Fraction(1, 2))
        if ric_t is not None:
            val = val + ric_t.get(idx).x_shift(1).scale(2)
        return val

    zero = gx.zero_component()
    return TensorJet.build(dim, "dd", ((SYM, (0, 1)),), entry, zero)


@dataclass
class EinsteinResidual:
    """The three blocks of Ric(g_+) + n g_+ for a radial metric."""

    E: TensorJet           # tangential, radial components
    Ei0: TensorJet         # mixed, rank 1
    E00: RadialSeries      # radial-radial scalar
    orders: dict           # block -> leading (x-order, log) or None


def leading_order_tensor(T: TensorJet):
    orders = [c.leading_order() for c in T.components.values()]
    orders = [o for o in orders if o is not None]
    if not orders:
        return None
    return min(orders, key=lambda kp: (kp[0], -kp[1]))


def einstein_residual(gx: TensorJet, g: MetricJet, n: int,
                      window=None) -> EinsteinResidual:
    """Evaluate all three Einstein-residual blocks on any radial metric.

    ``gx`` may be a solved expansion or hand-built; ``window`` bounds the
    x-orders computed (defaults to the assembly window, or n+2 for exact
    polynomial input).
    """
    if window is None:
        wins = [c.window for c in gx.components.values()]
        window = min(wins, default=INF)
        if window is INF:
            window = n + 2
    gx = gx.map_components(lambda c: c.truncate_window(window))
    gxM = MetricJet(gx)
    dim = gx.dim
    ginv = gxM.ginv_rows
    gp = gx.map_components(lambda c: c.x_derivative())
    gpp = gp.map_components(lambda c: c.x_derivative())

    E2x = _tangential_residual_2x(gx, n, ric_window=window - 2)
    E = E2x.map_components(lambda c: c.x_shift(-1).scale(Fraction(1, 2)))

    # E_i0 = (g^{kl}/2) (nabla_l g'_ik - nabla_i g'_kl), connection of g_x
    Dgp = covariant_derivative(gp, gxM)

    def entry_i0(idx):
        (i,) = idx
        acc = None
        for k in range(dim):
            for l in range(dim):
                t = ginv[k][l] * (Dgp.get((i, k, l)) - Dgp.get((k, l, i)))
                acc = t if acc is None else acc + t
        return acc.scale(Fraction(1, 2))

    Ei0 = TensorJet.build(dim, "d", (), entry_i0, gx.zero_component())

    # E_00 = -tr g''/2 + tr((g^{-1} g')^2)/4 + tr g' / (2x)
    trgpp = None
    trgp = None
    A = [[None] * dim for _ in range(dim)]
    for a in range(dim):
        for b in range(dim):
            acc = None
            for c in range(dim):
                comp = gp.get((c, b))
                if comp.is_zero():
                    continue
                t = ginv[a][c] * comp
                acc = t if acc is None else acc + t
            A[a][b] = acc
    for k in range(dim):
        for l in range(dim):
            t = ginv[k][l] * gpp.get((k, l))
            trgpp = t if trgpp is None else trgpp + t
    for a in range(dim):
        if A[a][a] is not None:
            trgp = A[a][a] if trgp is None else trgp + A[a][a]
    quad = None
    for a in range(dim):
        for b in range(dim):
            if A[a][b] is None or A[b][a] is None:
                continue
            t = A[a][b] * A[b][a]
            quad = t if quad is None else quad + t
    zero_r = gx.zero_component()
    E00 = (trgpp or zero_r).scale(Fraction(-1, 2))
    if quad is not None:
        E00 = E00 + quad.scale(Fraction(1, 4))
    if trgp is not None:
        E00 = E00 + trgp.x_shift(-1).scale(Fraction(1, 2))

    orders = {
        "E_ij": leading_order_tensor(E),
        "E_i0": leading_order_tensor(Ei0),
        "E_00": E00.leading_order(),
    }
    return EinsteinResidual(E, Ei0, E00, orders)


def bianchi_residual(gx: TensorJet, g: MetricJet, n: int, window=None):
    """Left minus right of the two contracted Bianchi identities.

    Both vanish identically (off-shell) for any radial metric; they validate
    the residual transcriptions rather than the Einstein equation.
    """
    res = einstein_residual(gx, g, n, window=window)
    gxw = gx.map_components(
        lambda c: c.truncate_window(window if window is not None else n + 2))
    gxM = MetricJet(gxw)
    dim = gx.dim
    ginv = gxM.ginv_rows
    gp = gxw.map_components(lambda c: c.x_derivative())
    trgp = None
    for k in range(dim):
        for l in range(dim):
            t = ginv[k][l] * gp.get((k, l))
            trgp = t if trgp is None else trgp + t

    E, Ei0, E00 = res.E, res.Ei0, res.E00

    # (bianchi1): g^{jk} E_jk' = 2 nabla^j E_j0
    #             + (d_x + g^{jk} g_jk' - 2(n-1)/x) E_00
    lhs1 = None
    for j in range(dim):
        for k in range(dim):
            t = ginv[j][k] * E.get((j, k)).x_derivative()
            lhs1 = t if lhs1 is None else lhs1 + t
    DEi0 = covariant_derivative(Ei0, gxM)
    div_e0 = None
    for j in range(dim):
        for c in range(dim):
            t = ginv[j][c] * DEi0.get((j, c))
            div_e0 = t if div_e0 is None else div_e0 + t
    rhs1 = div_e0.scale(2) + E00.x_derivative() + trgp * E00 \
        - E00.x_shift(-1).scale(2 * (n - 1))
    b1 = lhs1 - rhs1

    # (bianchi2): d_i E_00 + nabla_i E_j{}^j - 2 nabla^j E_ij
    #             = 2 (d_x + g^{jk} g_jk'/2 - (n-1)/x) E_i0
    trE = None
    for j in range(dim):
        for k in range(dim):
            t = ginv[j][k] * E.get((j, k))
            trE = t if trE is None else trE + t
    divE = divergence(E, gxM, slot=1)

    def entry_b2(idx):
        (i,) = idx
        lhs = E00.partial(i) + trE.partial(i) - divE.get((i,)).scale(2)
        rhs = (Ei0.get((i,)).x_derivative()
               + (trgp * Ei0.get((i,))).scale(Fraction(1, 2))
               - Ei0.get((i,)).x_shift(-1).scale(n - 1)).scale(2)
        return lhs - rhs

    b2 = TensorJet.build(dim, "d", (), entry_b2, gx.zero_component())
    return b1, b2


# ---------------------------------------------------------------------------
# the expansion solver
# ---------------------------------------------------------------------------

@dataclass
class FGExpansion:
    """Solved radial expansion: coefficients, obstruction, log coefficient."""

    n: int
    boundary: MetricJet
    coefficients: dict        # m -> TensorJet, 1 <= m < n (odd ones vanish)
    g_n: TensorJet            # pure-trace order-n coefficient
    r0: TensorJet             # coefficient of x^n log x
    obstruction: TensorJet
    gx: TensorJet             # assembled radial metric (window n+2)

    def assemble(self, window=None, include_log: bool = True,
                 include_order_n: bool = True) -> TensorJet:
        """Re-assemble the radial metric, optionally dropping pieces."""
        if window is None:
            window = self.n + 2
        coeffs = dict(self.coefficients)
        if include_order_n:
            coeffs[self.n] = self.g_n
        log_terms = {self.n: self.r0} if include_log else None
        return assemble_radial_metric(self.boundary, coeffs, window, log_terms)


def fg_expand(g: MetricJet, n: int, assume_even_parity: bool = True,
              window=None) -> FGExpansion:
    """Solve the radial expansion through order n and extract the obstruction.

    ``assume_even_parity`` skips the odd orders (they vanish identically);
    disable to watch the solver produce the zeros itself.
    """
    if n < 4 or n % 2:
        raise UsageError(f"the expansion solver needs even n >= 4, got {n}")
    if g.dim != n:
        raise UsageError(f"boundary metric dimension {g.dim} != n = {n}")
    cap0 = metric_cap(g)
    if cap0 < n:
        raise DegreeCapError(
            f"solving to order n={n} needs metric degree cap >= {n}, have {cap0}")
    if window is None:
        window = n + 2

    cns = constants(n)
    ginv = g.ginv_rows
    dim = g.dim
    coeffs: dict = {}

    def boundary_trace(T: TensorJet):
        acc = None
        for k in range(dim):
            for l in range(dim):
                comp = T.get((k, l))
                if comp.is_zero():
                    continue
                t = ginv[k][l] * comp
                acc = t if acc is None else acc + t
        return acc if acc is not None else T.zero_component()

    for s in range(1, n):
        if assume_even_parity and s % 2 == 1:
            continue
        gx_t = assemble_radial_metric(g, coeffs, window=s + 1)
        E2x = _tangential_residual_2x(gx_t, n, ric_window=s - 2)
        cap_here = max(0, cap0 - s)
        A = E2x.map_components(lambda c: c.coefficient(s - 1, 0, cap_here),
                               zero=TruncatedSeries.zero(
                                   g.g.zero_component().num_vars, cap_here,
                                   g.g.zero_component().backend))
        for comp in E2x.components.values():
            if not comp.coefficient(s - 1, 1, 0).is_zero():
                raise ArithmeticError(
                    f"unexpected log term at order {s - 1} while solving order {s}")
        V = A.scale(Fraction(-1, s))
        tr_a = boundary_trace(V).scale(Fraction(1, 2 * n - s))
        a = (V - g.g.mul_elem(tr_a)).scale(Fraction(1, n - s))
        if not a.is_zero():
            coeffs[s] = a

    # order n: obstruction, log coefficient, and the trace of g^(n)
    gx_t = assemble_radial_metric(g, coeffs, window=n + 1)
    E2x = _tangential_residual_2x(gx_t, n, ric_window=n - 2)
    capL = max(0, cap0 - n)
    zc = g.g.zero_component()
    L = E2x.map_components(lambda c: c.coefficient(n - 1, 0, capL),
                           zero=TruncatedSeries.zero(zc.num_vars, capL, zc.backend))
    trL = boundary_trace(L)
    tfL = L - g.g.mul_elem(trL.scale(Fraction(1, n)))
    obstruction = tfL.scale(cns.c_n * Fraction(1, 2))
    r0 = tfL.scale(Fraction(1, n))
    sigma = trL.scale(Fraction(-1, n * n * n))
    g_n = g.g.mul_elem(sigma)

    gx_full = assemble_radial_metric(
        g, {**coeffs, n: g_n}, window=window, log_coeffs={n: r0})
    return FGExpansion(n, g, coeffs, g_n, r0, obstruction, gx_full)


def obstruction_fg(g: MetricJet, n: int) -> TensorJet:
    """Obstruction tensor via the radial solver path."""
    return fg_expand(g, n).obstruction


def einstein_exact_solution(g: MetricJet, lam, n: int, window=None) -> TensorJet:
    """The closed-form radial family (1 - lam x^2)^2 g of an Einstein metric.

    Warns when the supplied jet does not satisfy Ric = 4 lam (n-1) g at the
    available degree.
    """
    ric = ricci(g)
    target = g.g.scale(4 * Fraction(lam) * (n - 1)) if not isinstance(lam, float) \
        else g.g.map_components(lambda c: c.scale(4.0 * lam * (n - 1)))
    if not (ric - target).is_zero():
        warnings.warn("metric jet is not Einstein with the requested constant; "
                      "the closed-form family will not solve the equation",
                      stacklevel=2)
    if window is None:
        window = n + 2
    lam2 = Fraction(lam) ** 2 if not isinstance(lam, float) else lam * lam
    coeffs = {
        2: g.g.scale(-2 * Fraction(lam)) if not isinstance(lam, float)
        else g.g.map_components(lambda c: c.scale(-2.0 * lam)),
        4: g.g.scale(lam2) if not isinstance(lam, float)
        else g.g.map_components(lambda c: c.scale(lam2)),
    }
    return assemble_radial_metric(g, coeffs, window=window)
