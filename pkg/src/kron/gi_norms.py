"""Norms on E^r (points of the Goldman-Iwahori space) and their operations.

A norm is stored through its *coordinate matrix* ``W``, the inverse of the
weighted basis ``U``: for a row vector ``x`` the coordinates in the basis
``U`` are ``x W`` and

    nu(x) = max_j ( n * log|(x W)_j| - c_j )

in base-q logarithms, with ``n = e f`` so that scalars act through the
normalized absolute value of E.  Acting by ``g`` (``(g*nu)(x) = nu(x g)``)
replaces ``W`` by ``g W``, which avoids inverting Laurent matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .exact_base import (
    BOTTOM,
    Algebra,
    FieldDesc,
    KronError,
    LaurentElem,
    LocalField,
    LogValue,
    PrecisionExhausted,
    RatFunc,
    SingularMatrix,
    base_field,
    local_field,
    parse_expr,
)


class DivergentIntegral(KronError):
    """The product-norm integral diverges for the requested exponent."""


# ---------------------------------------------------------------------------
# scalars and matrices over a local field


class _LaurentAlgebra(Algebra):
    def __init__(self, K: LocalField):
        self.K = K

    def const(self, n):
        return LaurentElem.const(self.K, self.K.embed[n % self.K.base.p])

    def symbol(self, name):
        K = self.K
        if name == "T":
            return LaurentElem.uniformizer(K, -K.e)
        if name == "u":
            return LaurentElem.uniformizer(K, 1)
        if name == "z":
            return LaurentElem.const(K, K.xi)
        if name == "g" and K.base.degree > 1:
            return LaurentElem.const(K, K.embed[K.base.generator])
        raise KronError(f"unknown symbol {name!r} for {K}")


def parse_local(text, K: LocalField) -> LaurentElem:
    """Parse an expression in T, u (uniformizer), z (residue generator), g."""
    if isinstance(text, int):
        return _LaurentAlgebra(K).const(text)
    return parse_expr(str(text), _LaurentAlgebra(K))


def to_local(x, K: LocalField) -> LaurentElem:
    if isinstance(x, LaurentElem):
        return x if x.K is K else x.lift_to(K)
    if isinstance(x, RatFunc):
        return LaurentElem.from_ratfunc(K, x)
    return parse_local(x, K)


def to_local_matrix(rows, K: LocalField) -> list[list[LaurentElem]]:
    return [[to_local(x, K) for x in row] for row in rows]


def mat_mul(A, B, K: LocalField | None = None):
    K = K or A[0][0].K
    zero = LaurentElem.zero(K)
    out = []
    for row in A:
        new = []
        for j in range(len(B[0])):
            acc = zero
            for i, a in enumerate(row):
                if a.is_certified_zero():
                    continue
                b = B[i][j]
                if b.is_certified_zero():
                    continue
                acc = acc + a * b
            new.append(acc)
        out.append(new)
    return out


def vec_mat(x, B, K: LocalField):
    return mat_mul([list(x)], B, K)[0]


def identity(K: LocalField, r: int):
    return [[LaurentElem.const(K, 1) if i == j else LaurentElem.zero(K) for j in range(r)] for i in range(r)]


def _pivot(rows, col, start):
    """Row index >= start holding the largest certified entry of ``col``."""
    best, best_val, uncertain = None, None, False
    for i in range(start, len(rows)):
        x = rows[i][col]
        if x.coeffs:
            if best is None or x.val < best_val:
                best, best_val = i, x.val
        elif not x.exact:
            uncertain = True
    if best is None:
        if uncertain:
            raise PrecisionExhausted("pivot column vanishes to working precision")
        raise SingularMatrix("matrix is singular")
    return best


def mat_det(M) -> LaurentElem:
    K = M[0][0].K
    rows = [list(r) for r in M]
    r = len(rows)
    det = LaurentElem.const(K, 1)
    for k in range(r):
        try:
            p = _pivot(rows, k, k)
        except SingularMatrix:
            return LaurentElem.zero(K)
        if p != k:
            rows[k], rows[p] = rows[p], rows[k]
            det = det.neg()
        piv = rows[k][k]
        det = det * piv
        inv = piv.inverse()
        for i in range(k + 1, r):
            x = rows[i][k]
            if x.is_certified_zero():
                continue
            factor = x * inv
            rows[i] = [rows[i][j] - factor * rows[k][j] if j > k else LaurentElem.zero(K) for j in range(r)]
    return det


def mat_inverse(M):
    K = M[0][0].K
    r = len(M)
    rows = [list(M[i]) + identity(K, r)[i] for i in range(r)]
    for k in range(r):
        p = _pivot(rows, k, k)
        rows[k], rows[p] = rows[p], rows[k]
        inv = rows[k][k].inverse()
        rows[k] = [x * inv for x in rows[k]]
        for i in range(r):
            if i == k or rows[i][k].is_certified_zero():
                continue
            factor = rows[i][k]
            rows[i] = [rows[i][j] - factor * rows[k][j] for j in range(2 * r)]
    return [row[r:] for row in rows]


def weighted_max(entries: Sequence[LaurentElem], weights: Sequence[Fraction], n: int) -> LogValue:
    """max_j (n log|y_j| - c_j), refusing to guess when an uncertified zero could win."""
    best = None
    pending = []
    for y, c in zip(entries, weights):
        if y.coeffs:
            val = n * Fraction(-y.val, y.K.e) - c
            if best is None or val > best:
                best = val
        elif y.prec is not None:
            pending.append(n * Fraction(-y.prec, y.K.e) - c)
    if best is None:
        if pending:
            raise PrecisionExhausted("vector vanishes to working precision")
        return BOTTOM
    if any(b > best for b in pending):
        raise PrecisionExhausted("an uncertified coordinate could dominate")
    return LogValue(best)


# ---------------------------------------------------------------------------
# norms


class Norm:
    """Weighted-basis norm on E^r, stored via the coordinate matrix W = U^{-1}."""

    __slots__ = ("K", "rank", "coords", "weights", "source")

    def __init__(self, K: LocalField, coords, weights, source: dict | None = None):
        self.K = K
        self.coords = [list(row) for row in coords]
        self.rank = len(self.coords)
        self.weights = tuple(Fraction(c) for c in weights)
        if len(self.weights) != self.rank:
            raise ValueError("weights and basis size differ")
        self.source = source

    @property
    def field(self) -> FieldDesc:
        return self.K.desc

    @property
    def n(self) -> int:
        return self.K.e * self.K.f

    @classmethod
    def standard(cls, field: FieldDesc | LocalField, r: int) -> "Norm":
        K = field if isinstance(field, LocalField) else local_field(field.q, field.e, field.f)
        return cls(K, identity(K, r), [0] * r)

    @classmethod
    def from_basis(cls, field: FieldDesc | LocalField, basis, weights) -> "Norm":
        K = field if isinstance(field, LocalField) else local_field(field.q, field.e, field.f)
        U = to_local_matrix(basis, K)
        return cls(K, mat_inverse(U), weights)

    @classmethod
    def from_json(cls, data: dict) -> "Norm":
        fd = data.get("field", {})
        K = local_field(int(fd.get("q", 2)), int(fd.get("e", 1)), int(fd.get("f", 1)))
        r = int(data["rank"])
        basis = data.get("basis")
        weights = [Fraction(w) for w in data.get("weights", ["0"] * r)]
        if basis is None:
            norm = cls(K, identity(K, r), weights)
        else:
            norm = cls.from_basis(K, basis, weights)
        norm.source = data
        return norm

    def to_json(self) -> dict:
        if self.source is not None:
            return self.source
        return {"field": self.field.to_json(), "rank": self.rank, "weights": [str(c) for c in self.weights],
                "basis": "derived"}

    @property
    def basis_matrix(self):
        return mat_inverse(self.coords)

    def eval_coords(self, y: Sequence[LaurentElem]) -> LogValue:
        return weighted_max(y, self.weights, self.n)

    def __call__(self, x) -> LogValue:
        return norm_eval(self, x)

    def shifted(self, c) -> "Norm":
        """The equivalent norm with every value increased by ``c``."""
        c = Fraction(c)
        return Norm(self.K, self.coords, [w - c for w in self.weights])

    def __repr__(self):
        return f"Norm({self.field}, rank={self.rank}, weights={[str(c) for c in self.weights]})"


@dataclass(frozen=True)
class OrthogonalReport:
    change_of_basis: list
    epsilons: tuple
    row_values: tuple


def norm_eval(nu: Norm, x) -> LogValue:
    if len(x) != nu.rank:
        raise ValueError("vector length does not match the rank")
    vec = [to_local(a, nu.K) for a in x]
    return nu.eval_coords(vec_mat(vec, nu.coords, nu.K))


def norm_act(g, nu: Norm) -> Norm:
    """(g*nu)(x) = nu(x g)."""
    G = to_local_matrix(g, nu.K)
    if mat_det(G).is_certified_zero():
        raise SingularMatrix("acting matrix is singular")
    return Norm(nu.K, mat_mul(G, nu.coords, nu.K), nu.weights)


def log_abs_det(M, n: int = 1) -> Fraction:
    d = mat_det(M)
    if d.is_certified_zero():
        raise SingularMatrix("singular matrix")
    return n * d.log_abs().value


def lattice_discriminant(nu: Norm, lattice=None) -> LogValue:
    """D_nu(L); the standard lattice O_E^r by default (closed form)."""
    if lattice is None:
        return LogValue(-sum(nu.weights) + log_abs_det(nu.coords, nu.n))
    rep = orthogonalize_lattice(nu, lattice)
    return LogValue(sum(rep.epsilons))


def imaginary_part(nu: Norm) -> Fraction:
    return lattice_discriminant(nu).value


def orthogonalize_lattice(nu: Norm, lattice) -> OrthogonalReport:
    """O_E-unimodular change of basis making the lattice rows nu-orthogonal.

    Greedy pivoting: take the entry of the coordinate matrix with the largest
    weighted value, clear its column in the other active rows (the quotient is
    integral because the pivot dominates), then recurse on the rest.
    """
    K = nu.K
    n = nu.n
    V = to_local_matrix(lattice, K)
    r = len(V)
    M = mat_mul(V, nu.coords, K)
    P = identity(K, r)
    active_rows = list(range(r))
    active_cols = list(range(r))
    pivots = {}
    while active_rows:
        best = None
        pending = []
        for i in active_rows:
            for j in active_cols:
                y = M[i][j]
                if y.coeffs:
                    w = n * Fraction(-y.val, K.e) - nu.weights[j]
                    if best is None or w > best[0]:
                        best = (w, i, j)
                elif not y.exact:
                    pending.append(n * Fraction(-y.prec, K.e) - nu.weights[j])
        if best is None:
            raise SingularMatrix("lattice is not of full rank")
        if any(b >= best[0] for b in pending):
            raise PrecisionExhausted("pivot choice not certified")
        w, i0, j0 = best
        inv = M[i0][j0].inverse()
        for i in active_rows:
            if i == i0 or M[i][j0].is_certified_zero():
                continue
            factor = M[i][j0] * inv
            M[i] = [M[i][j] - factor * M[i0][j] for j in range(r)]
            M[i][j0] = LaurentElem.zero(K)
            P[i] = [P[i][j] - factor * P[i0][j] for j in range(r)]
        pivots[i0] = w
        active_rows.remove(i0)
        active_cols.remove(j0)
    values = tuple(pivots[i] for i in range(r))
    return OrthogonalReport(P, tuple(sorted(values)), values)


def product_norm(norms: Sequence[Norm], t: Sequence) -> Norm:
    """Block norm x -> max_i (t_i + nu_i(x_i)), i.e. scale factors q^{t_i}."""
    if len(norms) != len(t):
        raise ValueError("one shift per factor")
    K = norms[0].K
    if any(nu.K is not K for nu in norms):
        raise ValueError("product of norms over different fields")
    total = sum(nu.rank for nu in norms)
    W = [[LaurentElem.zero(K) for _ in range(total)] for _ in range(total)]
    weights = []
    off = 0
    for nu, ti in zip(norms, t):
        for a in range(nu.rank):
            for b in range(nu.rank):
                W[off + a][off + b] = nu.coords[a][b]
        weights.extend(c - Fraction(ti) for c in nu.weights)
        off += nu.rank
    return Norm(K, W, weights)


def restrict_scalars(nu_E: Norm) -> Norm:
    """Norm on k_inf^{n r}: x -> (1/n) nu_E(assembled vector), basis xi^i u^j."""
    K = nu_E.K
    F = base_field(K.q)
    e, f, n, r = K.e, K.f, nu_E.n, nu_E.rank
    W = []
    for ell in range(r):
        for i in range(f):
            for j in range(e):
                basis_elem = LaurentElem.const(K, K.xi_powers[i]).shift(j)
                row = []
                for k in range(r):
                    row.extend(c for c in (basis_elem * nu_E.coords[ell][k]).to_base_coords())
                W.append(row)
    weights = []
    for k in range(r):
        for i in range(f):
            for j in range(e):
                weights.append(nu_E.weights[k] / n + Fraction(j, e))
    return Norm(F, W, weights)


def assemble(x_coords: Sequence[LaurentElem], K: LocalField) -> list[LaurentElem]:
    """Inverse of the coordinate isomorphism E^r -> F^{nr}."""
    n = K.e * K.f
    return [LaurentElem.from_base_coords(K, x_coords[ell * n:(ell + 1) * n]) for ell in range(len(x_coords) // n)]


def local_discriminant_log(field: FieldDesc) -> Fraction:
    """log_q of the discriminant of E over k_inf for the fixed tame model."""
    return Fraction(-field.f * (field.e - 1))


def automorphy_abs(g, nu: Norm) -> LogValue:
    """log |j(g, z)| = nu(last row of g)."""
    return norm_eval(nu, list(g)[-1])


def transform_point(g, nu: Norm) -> Norm:
    """Norm of the point g.z, normalized as |j(g,z)|^{-1} (g*nu)."""
    j = automorphy_abs(g, nu)
    return norm_act(g, nu).shifted(-j.value)


def seminorm_eval(nu: Norm, poly: dict) -> LogValue:
    """Value of the canonical multiplicative seminorm attached to ``nu``.

    ``poly`` maps exponent tuples (over e_1..e_r) to coefficients. Writing
    e_j = sum_i W_ji l_i in the linear forms l_i of the weighted basis, the
    seminorm is the max over monomials of |coeff| * prod nu(u_i)^{deg_i}.
    """
    K = nu.K
    r = nu.rank
    expanded: dict[tuple, LaurentElem] = {}
    for expo, coeff in poly.items():
        c = to_local(coeff, K)
        if c.is_certified_zero():
            continue
        terms = {tuple([0] * r): c}
        for j, power in enumerate(expo):
            for _ in range(power):
                new = {}
                for mono, a in terms.items():
                    for i in range(r):
                        w = nu.coords[j][i]
                        if w.is_certified_zero():
                            continue
                        key = tuple(m + (1 if idx == i else 0) for idx, m in enumerate(mono))
                        new[key] = new.get(key, LaurentElem.zero(K)) + a * w
                terms = new
        for mono, a in terms.items():
            expanded[mono] = expanded.get(mono, LaurentElem.zero(K)) + a
    n = nu.n
    entries, weights = [], []
    for mono, a in sorted(expanded.items()):
        entries.append(a)
        weights.append(sum(Fraction(m) * c for m, c in zip(mono, nu.weights)))
    if not entries:
        return BOTTOM
    return weighted_max(entries, weights, n)


def monomial_poly(spec: dict) -> dict:
    """Helper turning {"1,1": "1", "0,2": "T"} into exponent-tuple keys."""
    return {tuple(int(a) for a in key.split(",")): val for key, val in spec.items()}


# ---------------------------------------------------------------------------
# product-norm integral formula


def integral_formula_check(norms: Sequence[Norm], xs: Sequence, s) -> tuple[float, float, float]:
    """Both sides of the product-norm integral identity.

    The left side integrates D(nu(t))^s / nu(t)(x)^{rs} over R^m / diagonal,
    with nu(t) = max_i exp(t_i) nu_i(x_i), by splitting R^{m-1} (t_1 = 0)
    into the polyhedral regions where a given index attains the max; on each
    region the integrand is a product of exponentials integrated in closed
    form.  The right side is s^{1-m} r/(r_1..r_m) prod D_i^s / nu_i(x_i)^{r_i s}.
    """
    s = float(s)
    if s <= 0:
        raise DivergentIntegral("the integral converges only for s > 0")
    m = len(norms)
    ranks = [nu.rank for nu in norms]
    r = sum(ranks)
    lnq = math.log(norms[0].K.q)
    a = []
    log_d = []
    for nu, x in zip(norms, xs):
        v = norm_eval(nu, x)
        if v.is_bottom:
            raise ValueError("each component must be nonzero")
        a.append(float(v.value) * lnq)
        log_d.append(float(lattice_discriminant(nu).value) * lnq)
    log_prefactor = s * sum(log_d)
    if m == 1:
        val = math.exp(log_prefactor - ranks[0] * s * a[0])
        return val, val, 0.0
    pieces = []
    # region where index 0 attains the max (t_0 = 0 fixed)
    log_piece = -r * s * a[0]
    coef = 1.0
    for i in range(1, m):
        log_piece += s * ranks[i] * (a[0] - a[i])
        coef /= s * ranks[i]
    pieces.append(coef * math.exp(log_prefactor + log_piece))
    for j in range(1, m):
        coef = 1.0 / (s * ranks[0])
        log_piece = -r * s * a[j] - s * ranks[0] * (a[0] - a[j])
        for i in range(1, m):
            if i == j:
                continue
            coef /= s * ranks[i]
            log_piece += s * ranks[i] * (a[j] - a[i])
        pieces.append(coef * math.exp(log_prefactor + log_piece))
    lhs = math.fsum(pieces)
    log_rhs = (1 - m) * math.log(s) + math.log(r) - sum(math.log(ri) for ri in ranks)
    log_rhs += sum(s * ld - ri * s * ai for ld, ri, ai in zip(log_d, ranks, a))
    rhs = math.exp(log_rhs)
    return lhs, rhs, abs(lhs - rhs)


def product_integrand(norms: Sequence[Norm], xs: Sequence, s: float) -> Callable[[Sequence[float]], float]:
    """Pointwise integrand t_rest -> value at t = (0, t_rest), natural-log units (quadrature oracle)."""
    lnq = math.log(norms[0].K.q)
    s = float(s)
    ranks = [nu.rank for nu in norms]
    r = sum(ranks)
    vals = [float(norm_eval(nu, x).value) * lnq for nu, x in zip(norms, xs)]
    base = sum(float(lattice_discriminant(nu).value) * lnq for nu in norms)

    def integrand(t_rest: Sequence[float]) -> float:
        t = [0.0, *t_rest]
        log_d = base + sum(ri * ti for ri, ti in zip(ranks, t))
        top = max(ti + vi for ti, vi in zip(t, vals))
        return math.exp(s * log_d - r * s * top)

    return integrand


__all__ = [
    "Norm", "OrthogonalReport", "DivergentIntegral", "norm_eval", "norm_act", "lattice_discriminant",
    "imaginary_part", "orthogonalize_lattice", "product_norm", "restrict_scalars", "seminorm_eval",
    "automorphy_abs", "transform_point", "integral_formula_check", "mat_det", "mat_inverse", "mat_mul",
    "to_local", "to_local_matrix", "parse_local", "local_discriminant_log", "assemble", "log_abs_det",
    "product_integrand", "monomial_poly", "identity", "weighted_max",
]
