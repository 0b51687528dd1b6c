"""Free A-modules Y in k^r (A = F_q[T]): indices, norm balls, cosets, theta counts.

Everything rests on a reduced basis of Y for a norm nu on k_inf^r: a basis
y_1..y_r with levels d_i such that

    nu(sum a_i y_i) = max_i (log|a_i| + d_i)    for all a_i in k_inf.

Such a basis is produced by A-row operations on the coordinate matrix
(Popov-style reduction): within each residue class of levels mod 1 the leading
F_q-vectors of the rows must be linearly independent, and a dependency is
removed by subtracting T-power multiples of lower rows from the highest one.
With a reduced basis, balls are degree boxes and all ball sums factor
coordinate by coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Iterator, Sequence

from .exact_base import (
    KronError,
    LaurentElem,
    Poly,
    PrecisionExhausted,
    RatFunc,
    SingularMatrix,
    gf,
    parse_ratfunc,
    with_precision_retry,
)
from .gi_norms import Norm, mat_mul

DEFAULT_BUDGET = 10**7


class BallTooLarge(KronError):
    """A norm ball exceeds the enumeration budget."""


class ConstantA(KronError):
    """Coset representatives need a nonconstant modulus."""


class RankMismatch(KronError):
    """Modules of different ranks were compared."""


# ---------------------------------------------------------------------------
# exact linear algebra over k


def rat_identity(F, r: int) -> list[list[RatFunc]]:
    return [[RatFunc.one(F) if i == j else RatFunc.zero(F) for j in range(r)] for i in range(r)]


def rat_matmul(A, B):
    F = A[0][0].F
    out = []
    for row in A:
        new = []
        for j in range(len(B[0])):
            acc = RatFunc.zero(F)
            for i, a in enumerate(row):
                if not a.is_zero() and not B[i][j].is_zero():
                    acc = acc + a * B[i][j]
            new.append(acc)
        out.append(new)
    return out


def rat_vecmat(x, B):
    return rat_matmul([list(x)], B)[0]


def rat_det(M) -> RatFunc:
    F = M[0][0].F
    rows = [list(r) for r in M]
    r = len(rows)
    det = RatFunc.one(F)
    for k in range(r):
        p = next((i for i in range(k, r) if not rows[i][k].is_zero()), None)
        if p is None:
            return RatFunc.zero(F)
        if p != k:
            rows[k], rows[p] = rows[p], rows[k]
            det = -det
        piv = rows[k][k]
        det = det * piv
        inv = piv.inverse()
        for i in range(k + 1, r):
            if rows[i][k].is_zero():
                continue
            factor = rows[i][k] * inv
            rows[i] = [rows[i][j] - factor * rows[k][j] for j in range(r)]
    return det


def rat_inverse(M):
    F = M[0][0].F
    r = len(M)
    ident = rat_identity(F, r)
    rows = [list(M[i]) + ident[i] for i in range(r)]
    for k in range(r):
        p = next((i for i in range(k, r) if not rows[i][k].is_zero()), None)
        if p is None:
            raise SingularMatrix("matrix over k is singular")
        rows[k], rows[p] = rows[p], rows[k]
        inv = rows[k][k].inverse()
        rows[k] = [x * inv for x in rows[k]]
        for i in range(r):
            if i != k and not rows[i][k].is_zero():
                factor = rows[i][k]
                rows[i] = [rows[i][j] - factor * rows[k][j] for j in range(2 * r)]
    return [row[r:] for row in rows]


def common_denominator(rows) -> Poly:
    den = None
    for row in rows:
        for x in row:
            if den is None:
                den = x.den
            else:
                g = den.gcd(x.den)
                den = (den * x.den) // g
    return den.monic()


# ---------------------------------------------------------------------------
# Hermite normal form over A


def hnf(rows: Sequence[Sequence[Poly]]) -> list[list[Poly]]:
    """Row Hermite form of a full-column-rank polynomial matrix.

    Returns n upper-triangular rows with monic diagonal; entries above a
    pivot have smaller degree than the pivot.
    """
    M = [list(r) for r in rows]
    ncols = len(M[0])
    F = M[0][0].F
    out = []
    for k in range(ncols):
        live = [row for row in M if not row[k].is_zero()]
        rest = [row for row in M if row[k].is_zero()]
        if not live:
            raise SingularMatrix("module does not have full rank")
        while len(live) > 1:
            live.sort(key=lambda row: row[k].deg)
            piv = live[0]
            new_live = [piv]
            for row in live[1:]:
                qt = row[k] // piv[k]
                reduced = [a - qt * b for a, b in zip(row, piv)]
                if reduced[k].is_zero():
                    rest.append(reduced)
                else:
                    new_live.append(reduced)
            live = new_live
        piv = live[0]
        inv = F.inv[piv[k].lc()]
        piv = [a.scale(inv) for a in piv]
        out.append(piv)
        M = [row for row in rest if any(not a.is_zero() for a in row)]
    for k in range(ncols):
        for i in range(k):
            qt = out[i][k] // out[k][k]
            if not qt.is_zero():
                out[i] = [a - qt * b for a, b in zip(out[i], out[k])]
    return out


def _poly_rows(rows, den: Poly):
    dR = RatFunc(den)
    out = []
    for row in rows:
        new = []
        for x in row:
            y = x * dR
            if not y.is_poly():
                raise ValueError("denominator does not clear the matrix")
            new.append(y.num.scale(y.F.inv[y.den.lc()]) if y.den.deg == 0 else y.num)
        out.append(new)
    return out


# ---------------------------------------------------------------------------
# modules


@dataclass
class ModuleY:
    """Free A-module of rank r inside k^r, given by a basis over k."""

    q: int
    basis: list

    def __post_init__(self):
        F = gf(self.q)
        self.basis = [[x if isinstance(x, RatFunc) else parse_ratfunc(x, self.q) for x in row] for row in self.basis]
        if any(len(row) != len(self.basis) for row in self.basis):
            raise ValueError("basis must be square")
        if rat_det(self.basis).is_zero():
            raise SingularMatrix("basis is not invertible over k")
        self._F = F

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def F(self):
        return self._F

    @classmethod
    def standard(cls, q: int, r: int) -> "ModuleY":
        return cls(q, rat_identity(gf(q), r))

    @classmethod
    def from_json(cls, data: dict, q: int | None = None) -> "ModuleY":
        return cls(int(data.get("q", q)), data["basis"])

    def to_json(self) -> dict:
        return {"q": self.q, "rank": self.rank, "basis": [[x.to_str() for x in row] for row in self.basis]}

    def log_norm(self) -> int:
        """log_q ||Y||_A = deg det(basis); ||A^r|| = 1."""
        return rat_det(self.basis).degree()

    def scaled(self, c: RatFunc) -> "ModuleY":
        return ModuleY(self.q, [[c * x for x in row] for row in self.basis])

    def contains(self, w) -> bool:
        coords = rat_vecmat(w, rat_inverse(self.basis))
        return all(c.is_poly() for c in coords)

    def poly_hnf(self) -> tuple[list[list[Poly]], Poly]:
        den = common_denominator(self.basis)
        return hnf(_poly_rows(self.basis, den)), den

    def same_module(self, other: "ModuleY") -> bool:
        a, da = self.poly_hnf()
        b, db = other.poly_hnf()
        if da != db:
            scale = RatFunc(da * db)
            a, _ = self.scaled(scale).poly_hnf()
            b, _ = other.scaled(scale).poly_hnf()
        return a == b


def module_index_log(M: ModuleY, N: ModuleY) -> int:
    """log_q of the generalized index [N : M] = deg det of the change of basis."""
    if M.rank != N.rank:
        raise RankMismatch(f"ranks {M.rank} and {N.rank}")
    return M.log_norm() - N.log_norm()


def lattice_sum(M: ModuleY, N: ModuleY) -> ModuleY:
    den = common_denominator(M.basis + N.basis)
    rows = hnf(_poly_rows(M.basis + N.basis, den))
    dinv = RatFunc(den).inverse()
    return ModuleY(M.q, [[RatFunc(a) * dinv for a in row] for row in rows])


def lattice_intersection(M: ModuleY, N: ModuleY) -> ModuleY:
    """M cap N via the Hermite form of [[B_M, B_M], [B_N, 0]]."""
    r = M.rank
    den = common_denominator(M.basis + N.basis)
    BM = _poly_rows(M.basis, den)
    BN = _poly_rows(N.basis, den)
    F = M.F
    zero = Poly(F, ())
    stacked = [row + row for row in BM] + [row + [zero] * r for row in BN]
    H = hnf(stacked)
    dinv = RatFunc(den).inverse()
    return ModuleY(M.q, [[RatFunc(a) * dinv for a in row[r:]] for row in H[r:]])


# ---------------------------------------------------------------------------
# reduction with respect to a norm


@dataclass
class ReducedModule:
    """Basis y_i of Y with nu(sum a_i y_i) = max(log|a_i| + d_i)."""

    Y: ModuleY
    nu: Norm
    basis: list
    levels: tuple
    _inverse: list | None = field(default=None, repr=False)

    @property
    def q(self) -> int:
        return self.Y.q

    @property
    def rank(self) -> int:
        return len(self.levels)

    @property
    def inverse(self):
        if self._inverse is None:
            self._inverse = rat_inverse(self.basis)
        return self._inverse

    def coordinates(self, w) -> list[RatFunc]:
        return rat_vecmat(w, self.inverse)

    def degree_box(self, bound) -> list[int]:
        bound = Fraction(bound)
        return [math.floor(bound - d) for d in self.levels]

    def count(self, bound) -> int:
        """#{lambda in Y : nu(lambda) <= bound}, including 0."""
        total = 1
        for D in self.degree_box(bound):
            if D >= 0:
                total *= self.q ** (D + 1)
        return total

    def min_level(self) -> Fraction:
        return min(self.levels)


def _row_level(row, weights):
    best = None
    pending = []
    for y, c in zip(row, weights):
        if y.coeffs:
            v = Fraction(-y.val) - c
            if best is None or v > best:
                best = v
        elif not y.exact:
            pending.append(Fraction(-y.prec) - c)
    if best is None:
        raise PrecisionExhausted("row vanishes to working precision")
    if any(b >= best for b in pending):
        raise PrecisionExhausted("row level not certified")
    return best


def _reduce(Y: ModuleY, nu: Norm) -> ReducedModule:
    K = nu.K
    if K.e != 1 or K.f != 1:
        raise ValueError("global reduction needs a norm over k_inf itself")
    if nu.rank != Y.rank:
        raise RankMismatch("module and norm ranks differ")
    F = K.base
    r = Y.rank
    B = [[LaurentElem.from_ratfunc(K, x) for x in row] for row in Y.basis]
    M = mat_mul(B, nu.coords, K)
    P = [[Poly.const(F, 1) if i == j else Poly(F, ()) for j in range(r)] for i in range(r)]
    weights = nu.weights
    while True:
        levels = [_row_level(row, weights) for row in M]
        changed = False
        classes: dict[Fraction, list[int]] = {}
        for i, d in enumerate(levels):
            classes.setdefault(d - math.floor(d), []).append(i)
        for rho, members in sorted(classes.items()):
            cols = [j for j in range(r) if (rho + weights[j]).denominator == 1]
            members.sort(key=lambda i: (levels[i], i))
            echelon = []  # (pivot column position, vector, combination)
            for i in members:
                vec = [M[i][j].coeff(-int(levels[i] + weights[j])) for j in cols]
                combo = {i: 1}
                for pos, evec, ecombo in echelon:
                    a = vec[pos]
                    if a:
                        vec = [F.sub[x][F.mul[a][y]] for x, y in zip(vec, evec)]
                        for key, val in ecombo.items():
                            combo[key] = F.sub[combo.get(key, 0)][F.mul[a][val]]
                pos = next((p for p, x in enumerate(vec) if x), None)
                if pos is not None:
                    inv = F.inv[vec[pos]]
                    echelon.append((pos, [F.mul[inv][x] for x in vec], {k: F.mul[inv][v] for k, v in combo.items()}))
                    continue
                # sum combo_k T^{d_i - d_k} row_k has lower level than row i
                new_row = [LaurentElem.zero(K)] * r
                new_p = [Poly(F, ())] * r
                for k, coef in combo.items():
                    if not coef:
                        continue
                    shift = int(levels[i] - levels[k])
                    new_row = [a + b.scale(coef).shift(-shift) for a, b in zip(new_row, M[k])]
                    new_p = [a + b.scale(coef).shift(shift) for a, b in zip(new_p, P[k])]
                M[i] = new_row
                P[i] = new_p
                changed = True
                break
            if changed:
                break
        if not changed:
            break
    basis = rat_matmul([[RatFunc(p) for p in row] for row in P], Y.basis)
    return ReducedModule(Y, nu, basis, tuple(levels))


def reduce_module(Y: ModuleY, nu: Norm) -> ReducedModule:
    return with_precision_retry(_reduce, Y, nu)


# ---------------------------------------------------------------------------
# enumeration and counting


def polys_up_to(F, D: int) -> Iterator[Poly]:
    """All polynomials of degree <= D (just 0 when D < 0), in a fixed order."""
    if D < 0:
        yield Poly(F, ())
        return
    for coeffs in iproduct(range(F.order), repeat=D + 1):
        yield Poly(F, coeffs)


def enumerate_ball(Y: ModuleY, nu: Norm, bound, budget: int = DEFAULT_BUDGET) -> list[list[RatFunc]]:
    """Every lambda in Y with nu(lambda) <= bound (0 included)."""
    red = reduce_module(Y, nu)
    total = red.count(bound)
    if total > budget:
        raise BallTooLarge(f"{total} candidates exceed the budget {budget}")
    F = Y.F
    boxes = [list(polys_up_to(F, D)) for D in red.degree_box(bound)]
    out = []
    for coeffs in iproduct(*boxes):
        vec = [RatFunc.zero(F)] * Y.rank
        for a, row in zip(coeffs, red.basis):
            if a.is_zero():
                continue
            ar = RatFunc(a)
            vec = [v + ar * x for v, x in zip(vec, row)]
        out.append(vec)
    return out


def theta_count(Y: ModuleY, nu: Norm, y) -> int:
    return reduce_module(Y, nu).count(y)


def cosets_mod(Y: ModuleY, a) -> list[list[RatFunc]]:
    """Representatives of (1/a)Y / Y, zero first."""
    if not isinstance(a, RatFunc):
        a = parse_ratfunc(a, Y.q)
    if not a.is_poly():
        raise ValueError("the modulus must lie in A")
    if a.degree() is None or a.degree() <= 0:
        raise ConstantA("the modulus must be a nonconstant polynomial")
    F = Y.F
    inv_a = a.inverse()
    polys = list(polys_up_to(F, a.degree() - 1))
    reps = []
    for coeffs in iproduct(polys, repeat=Y.rank):
        vec = [RatFunc.zero(F)] * Y.rank
        for c, row in zip(coeffs, Y.basis):
            if c.is_zero():
                continue
            cr = RatFunc(c) * inv_a
            vec = [v + cr * x for v, x in zip(vec, row)]
        reps.append(vec)
    return reps


# ---------------------------------------------------------------------------
# value distributions over degree boxes


def coordinate_distribution(b: RatFunc, D: int, q: int) -> dict:
    """Multiset {log|a - b| : deg a <= D} as value -> count (None = log 0)."""
    D = max(D, -1)
    p, frac = b.split()
    if p.deg > D:
        return {Fraction(p.deg): q ** (D + 1)}
    out = {None if frac.is_zero() else Fraction(frac.degree()): 1}
    for d in range(D + 1):
        out[Fraction(d)] = (q - 1) * q**d
    return out


def affine_count(b: RatFunc, bound) -> int:
    """#{a in A : log|a - b| <= bound}."""
    bound = Fraction(bound)
    D = math.floor(bound)
    if D >= 0:
        return b.F.order ** (D + 1)
    _, frac = b.split()
    return 1 if frac.is_zero() or frac.degree() <= bound else 0


def shift_distribution(dist: dict, d) -> dict:
    return {(None if v is None else v + d): c for v, c in dist.items()}


def max_distribution(dists: Sequence[dict]) -> dict:
    """Distribution of max_i X_i for independent coordinates X_i."""
    values = sorted({v for d in dists for v in d}, key=lambda v: (v is not None, v if v is not None else 0))
    out = {}
    prev = 0
    cdfs = [0] * len(dists)
    for v in values:
        for idx, d in enumerate(dists):
            cdfs[idx] += d.get(v, 0)
        joint = 1
        for c in cdfs:
            joint *= c
        if joint != prev:
            out[v] = joint - prev
        prev = joint
    return out


def ball_distribution(red: ReducedModule, shifts: Sequence[RatFunc], box: Sequence[int]) -> dict:
    """Values nu(lambda - w) over lambda in a degree box, w with coordinates ``shifts``."""
    q = red.q
    dists = [shift_distribution(coordinate_distribution(b, D, q), d)
             for b, D, d in zip(shifts, box, red.levels)]
    return max_distribution(dists)


def shifted_count(red: ReducedModule, shifts: Sequence[RatFunc], bound) -> int:
    """#{lambda in Y : nu(lambda - w) <= bound} for w with the given coordinates."""
    total = 1
    bound = Fraction(bound)
    for b, d in zip(shifts, red.levels):
        c = affine_count(b, bound - d)
        if c == 0:
            return 0
        total *= c
    return total


def vector_value(red: ReducedModule, coords: Sequence[RatFunc]):
    """nu(sum b_i y_i) for rational coordinates b_i (None for the zero vector)."""
    best = None
    for b, d in zip(coords, red.levels):
        if b.is_zero():
            continue
        v = b.degree() + d
        if best is None or v > best:
            best = v
    return best


__all__ = [
    "ModuleY", "ReducedModule", "BallTooLarge", "ConstantA", "RankMismatch", "module_index_log",
    "reduce_module", "enumerate_ball", "theta_count", "cosets_mod", "coordinate_distribution",
    "affine_count", "max_distribution", "ball_distribution", "shifted_count", "vector_value",
    "rat_det", "rat_inverse", "rat_matmul", "rat_vecmat", "rat_identity", "hnf", "lattice_sum",
    "lattice_intersection", "polys_up_to", "DEFAULT_BUDGET",
]
