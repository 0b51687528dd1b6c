"""Finite extensions K = k[x]/(f) of k = F_q(T), their orders, infinite places
and the Heegner-cycle parametrization.

Elements of K are tuples of power-basis coordinates (coefficients of
1, x, ..., x^{n-1} in k).  Global invariants that need class-field machinery
(genus, units, class representatives, conductor index) are inputs and are
cross-checked rather than computed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from pathlib import Path
from typing import Sequence

from .exact_base import (
    Algebra,
    KronError,
    LaurentElem,
    LocalField,
    Poly,
    RatFunc,
    base_field,
    current_precision,
    gf,
    local_field,
    parse_expr,
    prime_power,
)
from .gi_norms import (
    Norm,
    lattice_discriminant,
    local_discriminant_log,
    mat_det,
    mat_mul,
    parse_local,
    product_norm,
    restrict_scalars,
)
from .lattice_enum import (
    BallTooLarge,
    DEFAULT_BUDGET,
    ModuleY,
    _poly_rows,
    common_denominator,
    hnf,
    polys_up_to,
    enumerate_ball,
    lattice_intersection,
    module_index_log,
    rat_inverse,
    rat_vecmat,
    reduce_module,
)

SCHEMA = "extension-v1"
FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"


class ValidationFailed(KronError):
    def __init__(self, check: str, message: str):
        super().__init__(f"check {check} failed: {message}")
        self.check = check


class SchemaError(KronError):
    pass


class DegenerateUnits(KronError):
    pass


class WInL(KronError):
    pass


# ---------------------------------------------------------------------------
# polynomials in x over k


class _XPoly:
    """Dense polynomial in x with coefficients in k, used only while parsing."""

    __slots__ = ("F", "c")

    def __init__(self, F, coeffs):
        c = list(coeffs)
        while c and c[-1].is_zero():
            c.pop()
        self.F, self.c = F, c

    def _get(self, i):
        return self.c[i] if i < len(self.c) else RatFunc.zero(self.F)

    def __add__(self, o):
        return _XPoly(self.F, [self._get(i) + o._get(i) for i in range(max(len(self.c), len(o.c)))])

    def __neg__(self):
        return _XPoly(self.F, [-a for a in self.c])

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if not self.c or not o.c:
            return _XPoly(self.F, [])
        out = [RatFunc.zero(self.F)] * (len(self.c) + len(o.c) - 1)
        for i, a in enumerate(self.c):
            if a.is_zero():
                continue
            for j, b in enumerate(o.c):
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return _XPoly(self.F, out)

    def __truediv__(self, o):
        if len(o.c) != 1:
            raise KronError("division by a non-constant polynomial in x")
        inv = o.c[0].inverse()
        return _XPoly(self.F, [a * inv for a in self.c])

    def __pow__(self, n):
        if n < 0:
            raise KronError("negative powers of x are not supported")
        out = _XPoly(self.F, [RatFunc.one(self.F)])
        for _ in range(n):
            out = out * self
        return out


class _XAlgebra(Algebra):
    def __init__(self, F):
        self.F = F

    def const(self, n):
        return _XPoly(self.F, [RatFunc.const(self.F, n % self.F.p)])

    def symbol(self, name):
        F = self.F
        if name == "x":
            return _XPoly(F, [RatFunc.zero(F), RatFunc.one(F)])
        if name == "T":
            return _XPoly(F, [RatFunc.T(F)])
        if name == "g" and F.degree > 1:
            return _XPoly(F, [RatFunc.const(F, F.generator)])
        raise KronError(f"unknown symbol {name!r}")


def _fmt_element(coords: Sequence[RatFunc]) -> str:
    parts = []
    for i, c in enumerate(coords):
        if c.is_zero():
            continue
        mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
        cs = c.to_str()
        if not mono:
            parts.append(cs)
        elif cs == "1":
            parts.append(mono)
        else:
            parts.append(f"({cs})*{mono}")
    return " + ".join(parts) if parts else "0"


# ---------------------------------------------------------------------------
# extension data


@dataclass
class Place:
    e: int
    f: int
    root: str
    K: LocalField

    @property
    def n(self) -> int:
        return self.e * self.f


@dataclass
class ExtensionData:
    name: str
    q: int
    min_poly: list
    basis_beta: list
    places: list
    order_basis: list
    units: list
    torsion_generator: tuple
    q_O: int
    genus: int
    const_deg: int
    class_reps: list
    conductor_index_log: int
    ray: list = field(default_factory=list)
    pic_products: list = field(default_factory=list)
    source: dict = field(default_factory=dict, repr=False)
    _roots: dict = field(default_factory=dict, repr=False)

    # construction ---------------------------------------------------------
    @classmethod
    def from_json(cls, data) -> "ExtensionData":
        if isinstance(data, (str, Path)):
            path = Path(data)
            if not path.exists():
                path = FIXTURE_DIR / f"{data}.json"
            data = json.loads(path.read_text())
        if data.get("schema") != SCHEMA:
            raise SchemaError(f"unknown schema {data.get('schema')!r}")
        q = int(data["q"])
        F = gf(q)
        fpoly = parse_expr(data["min_poly"], _XAlgebra(F))
        if not fpoly.c or fpoly.c[-1] != RatFunc.one(F):
            raise SchemaError("min_poly must be monic in x")
        n = len(fpoly.c) - 1
        ext = cls.__new__(cls)
        ext.name = data.get("name", "extension")
        ext.q = q
        ext.min_poly = fpoly.c
        ext._roots = {}
        ext.source = data
        parse = ext.element
        ext.basis_beta = [parse(s) for s in data["basis_beta"]]
        if len(ext.basis_beta) != n:
            raise SchemaError("basis_beta must have n elements")
        ext.places = [Place(int(p["e"]), int(p["f"]), str(p["root"]), local_field(q, int(p["e"]), int(p["f"])))
                      for p in data["places"]]
        ext.order_basis = [parse(s) for s in data["order_basis"]]
        ext.units = [parse(s) for s in data.get("units", [])]
        ext.torsion_generator = parse(data.get("torsion_generator", "1"))
        ext.q_O = int(data["q_O"])
        ext.genus = int(data["genus"])
        ext.const_deg = int(data["const_deg"])
        ext.class_reps = [[parse(s) for s in rep] for rep in data.get("class_reps", [data["order_basis"]])]
        ext.conductor_index_log = int(data["conductor_index_log"])
        ext.ray = data.get("ray", [])
        ext.pic_products = data.get("pic_products", [])
        return ext

    def to_json(self) -> dict:
        return self.source

    # arithmetic in K --------------------------------------------------------
    @property
    def F(self):
        return gf(self.q)

    @property
    def n(self) -> int:
        return len(self.min_poly) - 1

    @property
    def m(self) -> int:
        return len(self.places)

    def _reduce(self, coeffs: list) -> tuple:
        F, n = self.F, self.n
        c = list(coeffs)
        while len(c) > n:
            top = c.pop()
            if top.is_zero():
                continue
            for i in range(n):
                if not self.min_poly[i].is_zero():
                    idx = len(c) - n + i
                    c[idx] = c[idx] - top * self.min_poly[i]
        c += [RatFunc.zero(F)] * (n - len(c))
        return tuple(c)

    def element(self, text) -> tuple:
        if isinstance(text, tuple):
            return text
        return self._reduce(parse_expr(str(text), _XAlgebra(self.F)).c)

    def fmt(self, a) -> str:
        return _fmt_element(a)

    def one(self) -> tuple:
        return self.element("1")

    def add(self, a, b) -> tuple:
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b) -> tuple:
        return tuple(x - y for x, y in zip(a, b))

    def scale(self, c: RatFunc, a) -> tuple:
        return tuple(c * x for x in a)

    def mul(self, a, b) -> tuple:
        F = self.F
        out = [RatFunc.zero(F)] * (2 * self.n - 1)
        for i, x in enumerate(a):
            if x.is_zero():
                continue
            for j, y in enumerate(b):
                if not y.is_zero():
                    out[i + j] = out[i + j] + x * y
        return self._reduce(out)

    def power(self, a, k: int) -> tuple:
        if k < 0:
            return self.power(self.inverse(a), -k)
        out = self.one()
        for _ in range(k):
            out = self.mul(out, a)
        return out

    def mult_matrix(self, a) -> list:
        """Matrix of y -> a*y on the power basis (rows = images of x^i)."""
        F = self.F
        rows = []
        for i in range(self.n):
            basis = tuple(RatFunc.one(F) if j == i else RatFunc.zero(F) for j in range(self.n))
            rows.append(list(self.mul(a, basis)))
        return rows

    def inverse(self, a) -> tuple:
        M = self.mult_matrix(a)
        one = list(self.one())
        return tuple(rat_vecmat(one, rat_inverse(M)))

    def is_zero(self, a) -> bool:
        return all(x.is_zero() for x in a)

    def to_beta(self, a) -> list:
        return rat_vecmat(list(a), rat_inverse([list(b) for b in self.basis_beta]))

    def from_beta(self, coords) -> tuple:
        return tuple(rat_vecmat(list(coords), [list(b) for b in self.basis_beta]))

    # local embeddings -------------------------------------------------------
    def root(self, i: int) -> LaurentElem:
        """Root of min_poly in K_{inf_i}, refined by Newton iteration to the working precision."""
        prec = current_precision()
        key = (i, prec)
        if key in self._roots:
            return self._roots[key]
        place = self.places[i]
        K = place.K
        f = [LaurentElem.from_ratfunc(K, c) for c in self.min_poly]
        df = [f[j].scale(K.embed[j % K.base.p]) for j in range(1, len(f))]

        def horner(coeffs, x):
            acc = LaurentElem.zero(K)
            for c in reversed(coeffs):
                acc = acc * x + c
            return acc

        x = parse_local(place.root, K)
        for _ in range(4 + 2 * max(1, prec).bit_length()):
            val = horner(f, x)
            if not val.coeffs:
                break
            x = x - val / horner(df, x)
        self._roots[key] = x
        return x

    def embed(self, a, i: int) -> LaurentElem:
        K = self.places[i].K
        x = self.root(i)
        acc = LaurentElem.zero(K)
        for c in reversed(a):
            acc = acc * x + LaurentElem.from_ratfunc(K, c)
        return acc

    def iota(self, a, i: int) -> list:
        return self.embed(a, i).to_base_coords()

    def log_abs(self, a, i: int) -> Fraction:
        """log_q |a|_i in the k_inf-extended normalization."""
        v = self.embed(a, i).log_abs()
        if v.is_bottom:
            raise ValueError("log of zero")
        return v.value

    def norm_log(self, a) -> Fraction:
        """log_q of ||aO|| = sum_i n_i log|a|_i."""
        return sum(p.n * self.log_abs(a, i) for i, p in enumerate(self.places))

    # modules -----------------------------------------------------------------
    def module(self, elements: Sequence, r: int = 1) -> ModuleY:
        """Y_L for L = J^r (J with the given A-basis), in beta_{o,r} coordinates, l outer."""
        n = self.n
        F = self.F
        rows = []
        for ell in range(r):
            for a in elements:
                coords = self.to_beta(self.element(a))
                row = [RatFunc.zero(F)] * (n * r)
                row[ell * n:(ell + 1) * n] = coords
                rows.append(row)
        return ModuleY(self.q, rows)

    def module_direct_sum(self, ideals: Sequence[Sequence]) -> ModuleY:
        """Y_L for L = J_1 e_1 + ... + J_r e_r."""
        n = self.n
        F = self.F
        r = len(ideals)
        rows = []
        for ell, elements in enumerate(ideals):
            for a in elements:
                row = [RatFunc.zero(F)] * (n * r)
                row[ell * n:(ell + 1) * n] = self.to_beta(self.element(a))
                rows.append(row)
        return ModuleY(self.q, rows)

    def ideal_elements(self, Y: ModuleY) -> list:
        """A-basis of a rank-n module, read back as elements of K."""
        return [self.from_beta(row) for row in Y.basis]

    def order_module(self, r: int = 1) -> ModuleY:
        return self.module(self.order_basis, r)

    def ideal_norm_log(self, L: ModuleY) -> int:
        """log_q ||L||_O relative to O^r."""
        r = L.rank // self.n
        return module_index_log(L, self.order_module(r))

    def principal(self, a) -> ModuleY:
        return self.module([self.mul(a, b) for b in self.order_basis])

    def ideal_product(self, I: ModuleY, J: ModuleY) -> ModuleY:
        rows = [self.to_beta(self.mul(a, b)) for a in self.ideal_elements(I) for b in self.ideal_elements(J)]
        return span_module(self.q, rows)

    def colon(self, I: ModuleY) -> ModuleY:
        """(O : I) = intersection over the A-basis b_j of I of b_j^{-1} O."""
        out = None
        for b in self.ideal_elements(I):
            binv = self.inverse(b)
            piece = self.module([self.mul(binv, w) for w in self.order_basis])
            out = piece if out is None else lattice_intersection(out, piece)
        return out

    def is_o_stable(self, Y: ModuleY) -> bool:
        for a in self.ideal_elements(Y):
            for w in self.order_basis:
                if not Y.contains(self.to_beta(self.mul(w, a))):
                    return False
        return True

    def is_invertible(self, I: ModuleY) -> bool:
        return self.ideal_product(I, self.colon(I)).same_module(self.order_module())


def span_module(q: int, rows) -> ModuleY:
    """A-span of finitely many vectors of full rank."""
    den = common_denominator(rows)
    H = hnf(_poly_rows(rows, den))
    dinv = RatFunc(den).inverse()
    return ModuleY(q, [[RatFunc(a) * dinv for a in r] for r in H])


def load_fixture(name) -> ExtensionData:
    return ExtensionData.from_json(name)


def fixture_names() -> list[str]:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.json"))


# ---------------------------------------------------------------------------
# invariants


def transition_matrix(ext: ExtensionData, r: int = 1) -> list:
    """g_{o,r}: rows iota(lambda_t e_l), l outer; columns by place, then l, then local coordinates."""
    F = base_field(ext.q)
    n = ext.n
    iotas = [[ext.iota(lam, i) for i in range(ext.m)] for lam in ext.basis_beta]
    rows = []
    for ell in range(r):
        for t in range(n):
            row = []
            for i, place in enumerate(ext.places):
                for ell2 in range(r):
                    if ell2 == ell:
                        row.extend(iotas[t][i])
                    else:
                        row.extend(LaurentElem.zero(F) for _ in range(place.n))
            rows.append(row)
    return rows


def log_abs_det_transition(ext: ExtensionData, r: int = 1) -> Fraction:
    d = mat_det(transition_matrix(ext, r))
    v = d.log_abs()
    if v.is_bottom:
        raise ValidationFailed("g", "transition matrix is singular")
    return v.value


def discriminant_quantity(ext: ExtensionData) -> Fraction:
    """log_q d(O/A)."""
    local = sum(local_discriminant_log(p.K.desc) for p in ext.places)
    return Fraction(2 * ext.conductor_index_log + (2 * ext.genus - 2) * ext.const_deg + 2 * ext.n) + local


@dataclass
class ValidationReport:
    checks: dict

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": self.checks}


def ext_validate(ext: ExtensionData, strict: bool = True) -> ValidationReport:
    checks = {}
    # (i) embeddings annihilate the defining polynomial
    ok_i = True
    for i, place in enumerate(ext.places):
        x = ext.root(i)
        acc = LaurentElem.zero(place.K)
        for c in reversed(ext.min_poly):
            acc = acc * x + LaurentElem.from_ratfunc(place.K, c)
        if acc.coeffs:
            ok_i = False
    checks["i"] = {"name": "embeddings", "pass": ok_i}
    # (ii) local degrees
    total = sum(p.n for p in ext.places)
    checks["ii"] = {"name": "local degrees", "pass": total == ext.n, "lhs": total, "rhs": ext.n}
    # (iii) product formula for units
    unit_logs = [str(ext.norm_log(u)) for u in ext.units]
    checks["iii"] = {"name": "unit norms", "pass": all(v == "0" for v in unit_logs), "values": unit_logs}
    # (iv) genus comparison identity for L = O^r
    p, _ = prime_power(ext.q_O)
    pq, _ = prime_power(ext.q)
    rows = []
    ok_iv = p == pq
    for r in (1, 2):
        L = ext.order_module(r)
        lhs = log_abs_det_transition(ext, r) + L.log_norm() - ext.ideal_norm_log(L)
        rhs = Fraction((ext.conductor_index_log + (ext.genus - 1) * ext.const_deg + ext.n) * r)
        rows.append({"r": r, "lhs": str(lhs), "rhs": str(rhs)})
        ok_iv = ok_iv and lhs == rhs
    checks["iv"] = {"name": "genus identity", "pass": ok_iv, "cases": rows}
    report = ValidationReport(checks)
    if strict:
        for key, c in checks.items():
            if not c["pass"]:
                raise ValidationFailed(key, json.dumps(c, sort_keys=True))
    return report


# ---------------------------------------------------------------------------
# regulator torus


@dataclass
class Torus:
    """R^m / (unit logs + diagonal) in base-q units, via t -> (t_2 - t_1, ...)."""

    m: int
    vectors: list  # projected unit log vectors, one per generator

    @property
    def dim(self) -> int:
        return self.m - 1

    @property
    def volume(self) -> Fraction:
        if self.m == 1:
            return Fraction(1)
        return abs(_frac_det([list(v) for v in self.vectors]))

    def coords(self, tp: Sequence[Fraction]) -> list[Fraction]:
        """theta with tp = sum theta_j v_j."""
        inv = _frac_inverse([list(v) for v in self.vectors])
        return [sum(Fraction(tp[i]) * inv[i][j] for i in range(self.dim)) for j in range(self.dim)]

    def contains(self, tp) -> bool:
        return all(0 <= th < 1 for th in self.coords(tp))

    def box(self) -> list[tuple[Fraction, Fraction]]:
        """Coordinate bounding box of the half-open parallelepiped."""
        out = []
        for i in range(self.dim):
            lo = sum(min(Fraction(0), v[i]) for v in self.vectors)
            hi = sum(max(Fraction(0), v[i]) for v in self.vectors)
            out.append((lo, hi))
        return out


def _frac_det(M) -> Fraction:
    M = [list(map(Fraction, r)) for r in M]
    n = len(M)
    det = Fraction(1)
    for k in range(n):
        p = next((i for i in range(k, n) if M[i][k] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k:
            M[k], M[p] = M[p], M[k]
            det = -det
        det *= M[k][k]
        for i in range(k + 1, n):
            f = M[i][k] / M[k][k]
            M[i] = [a - f * b for a, b in zip(M[i], M[k])]
    return det


def _frac_inverse(M):
    n = len(M)
    A = [list(map(Fraction, M[i])) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for k in range(n):
        p = next(i for i in range(k, n) if A[i][k] != 0)
        A[k], A[p] = A[p], A[k]
        piv = A[k][k]
        A[k] = [a / piv for a in A[k]]
        for i in range(n):
            if i != k and A[i][k] != 0:
                f = A[i][k]
                A[i] = [a - f * b for a, b in zip(A[i], A[k])]
    return [row[n:] for row in A]


def unit_log_vector(ext: ExtensionData, u) -> list[Fraction]:
    return [ext.log_abs(u, i) for i in range(ext.m)]


def torus_for_units(ext: ExtensionData, units: Sequence) -> Torus:
    vecs = []
    for u in units:
        lv = unit_log_vector(ext, u)
        vecs.append(tuple(lv[i] - lv[0] for i in range(1, ext.m)))
    torus = Torus(ext.m, vecs)
    if ext.m > 1 and torus.volume == 0:
        raise DegenerateUnits("unit logs are linearly dependent")
    return torus


def regulator_and_domain(ext: ExtensionData) -> tuple[Fraction, Torus]:
    """R(O) / ln q and the fundamental domain of T(O)."""
    if ext.m == 1:
        return Fraction(1), Torus(1, [])
    if len(ext.units) != ext.m - 1:
        raise DegenerateUnits("need m - 1 unit generators")
    M = [[ext.places[i].n * ext.log_abs(u, i) for i in range(ext.m - 1)] for u in ext.units]
    R = abs(_frac_det(M))
    if R == 0:
        raise DegenerateUnits("unit logs are linearly dependent")
    return R, torus_for_units(ext, ext.units)


# ---------------------------------------------------------------------------
# Heegner norms


@dataclass
class HeegnerParam:
    ext: ExtensionData
    r: int
    torus: Torus
    regulator: Fraction
    _g: dict = field(default_factory=dict, repr=False)

    @property
    def g_transition(self):
        prec = current_precision()
        if prec not in self._g:
            self._g[prec] = transition_matrix(self.ext, self.r)
        return self._g[prec]

    @property
    def nr(self) -> int:
        return self.ext.n * self.r

    def n_product(self) -> int:
        return math.prod(p.n for p in self.ext.places)


def heegner_param(ext: ExtensionData, r: int = 1) -> HeegnerParam:
    R, torus = regulator_and_domain(ext)
    return HeegnerParam(ext, r, torus, R)


def canonical_norms(ext: ExtensionData, r: int = 1) -> list[Norm]:
    """Standard norm on K_{inf_i}^r for each place (normalized absolute value)."""
    return [Norm.standard(p.K, r) for p in ext.places]


def heegner_coords(param: HeegnerParam, nus: Sequence[Norm]):
    """Coordinate matrix and base weights of g_{o,r} * prod res(nu_i)."""
    res = [restrict_scalars(nu) for nu in nus]
    prod = product_norm(res, [0] * len(res))
    coords = mat_mul(param.g_transition, prod.coords)
    return coords, prod.weights, [nu.rank for nu in res]


def heegner_norm(param: HeegnerParam, nus: Sequence[Norm], t: Sequence) -> Norm:
    if len(nus) != param.ext.m or len(t) != param.ext.m:
        raise ValueError("one norm and one shift per place")
    coords, weights, sizes = heegner_coords(param, nus)
    shifted = []
    idx = 0
    for size, ti in zip(sizes, t):
        shifted.extend(w - Fraction(ti) for w in weights[idx:idx + size])
        idx += size
    return Norm(base_field(param.ext.q), coords, shifted)


def heegner_discriminant_closed(param: HeegnerParam, nus: Sequence[Norm], t: Sequence) -> Fraction:
    """D of the Heegner norm from log|det g| + sum (n_i r t_i + (r/2) log d_i + D(nu_i))."""
    total = log_abs_det_transition(param.ext, param.r)
    for p, nu, ti in zip(param.ext.places, nus, t):
        total += p.n * param.r * Fraction(ti) + Fraction(param.r, 2) * local_discriminant_log(p.K.desc)
        total += lattice_discriminant(nu).value
    return total


# ---------------------------------------------------------------------------
# orbits


def element_logs(ext: ExtensionData, nus: Sequence[Norm], vec_beta: Sequence[RatFunc], r: int) -> list[Fraction]:
    """(nu_i(lambda^{(i)}) / n_i)_i for lambda given in beta_{o,r} coordinates."""
    n = ext.n
    parts = [ext.from_beta(vec_beta[ell * n:(ell + 1) * n]) for ell in range(r)]
    out = []
    for i, (p, nu) in enumerate(zip(ext.places, nus)):
        local = [ext.embed(a, i) for a in parts]
        v = nu(local)
        out.append(None if v.is_bottom else v.value / p.n)
    return out


def _mul_vec(ext: ExtensionData, a, vec_beta, r: int):
    n = ext.n
    out = []
    for ell in range(r):
        x = ext.from_beta(vec_beta[ell * n:(ell + 1) * n])
        out.extend(ext.to_beta(ext.mul(a, x)))
    return out


def _key(vec) -> tuple:
    return tuple((x.num.c, x.den.c) for x in vec)


def torsion_elements(ext: ExtensionData) -> list:
    out = [ext.one()]
    z = ext.torsion_generator
    cur = z
    while cur != ext.one() and len(out) < ext.q_O:
        out.append(cur)
        cur = ext.mul(cur, z)
    return out


def _canonical_shift(ext, torus: Torus, logs):
    tp = [logs[i] - logs[0] for i in range(1, ext.m)]
    theta = torus.coords(tp)
    return [math.floor(th) for th in theta]


def orbit_reps(ext: ExtensionData, L: ModuleY, bound, *, nus=None, units=None, torsion: bool = True,
               shift=None, budget: int = DEFAULT_BUDGET) -> list:
    """Canonical representatives of (shift + L - 0) / U with norm log <= bound.

    U is generated by ``units`` (default: the unit generators) and, when
    ``torsion`` is set, the constants F_O^x.  The norm log of lambda is
    sum_i nu_i(lambda^{(i)}); each orbit is represented by the element whose
    projected log vector lies in the half-open fundamental parallelepiped,
    then by the smallest coordinate key among its torsion multiples.
    """
    r = L.rank // ext.n
    nus = nus or canonical_norms(ext, r)
    units = ext.units if units is None else units
    torus = torus_for_units(ext, units) if ext.m > 1 else Torus(1, [])
    bound = Fraction(bound)
    param = heegner_param(ext, r)
    box = torus.box() if ext.m > 1 else []
    lows = [Fraction(0)] + [lo for lo, _ in box]
    highs = [Fraction(0)] + [hi for _, hi in box]
    n = ext.n
    top1 = (bound - sum(p.n * lo for p, lo in zip(ext.places, lows))) / n
    t = [-(top1 + hi) for hi in highs]
    nu_b = heegner_norm(param, nus, t)
    if shift is None:
        pts = enumerate_ball(L, nu_b, 0, budget)
    else:
        pts = _enumerate_affine(L, nu_b, shift, budget)
    tors = torsion_elements(ext) if torsion else [ext.one()]
    reps = {}
    for lam in pts:
        if all(x.is_zero() for x in lam):
            continue
        logs = element_logs(ext, nus, lam, r)
        if sum(p.n * v for p, v in zip(ext.places, logs)) > bound:
            continue
        if ext.m > 1 and not torus.contains([logs[i] - logs[0] for i in range(1, ext.m)]):
            continue
        key = min(_key(_mul_vec(ext, z, lam, r)) for z in tors)
        reps[key] = lam
    return [reps[k] for k in sorted(reps)]


def _enumerate_affine(L: ModuleY, nu: Norm, shift, budget):
    """Points w + lambda (lambda in L) with nu <= 0."""
    red = reduce_module(L, nu)
    coords = red.coordinates(shift)
    F = L.F
    boxes = []
    total = 1
    for b, d in zip(coords, red.levels):
        p, frac = b.split()
        D = math.floor(-d)
        if D >= 0:
            choices = [RatFunc(c) - RatFunc(p) for c in polys_up_to(F, D)]
        else:
            choices = [-RatFunc(p)] if (frac.is_zero() or frac.degree() <= -d) else []
        total *= len(choices)
        boxes.append(choices)
    if total > budget:
        raise BallTooLarge(f"{total} candidates exceed the budget {budget}")
    out = []
    for combo in iproduct(*boxes):
        vec = list(shift)
        for a, row in zip(combo, red.basis):
            vec = [v + a * x for v, x in zip(vec, row)]
        out.append(vec)
    return out


# ---------------------------------------------------------------------------
# annihilators and congruence units


def annihilator(ext: ExtensionData, L: ModuleY, w_beta: Sequence[RatFunc]) -> ModuleY:
    """C_w = {a in O : a w in L} as an A-lattice in beta coordinates (r = 1 or general)."""
    r = L.rank // ext.n
    n = ext.n
    # a w in L  <=>  a in (L : w); use the map a -> a*w on the A-basis of O
    images = [_mul_vec(ext, b, w_beta, r) for b in ext.order_basis]
    inv = rat_inverse(L.basis)
    coords = [rat_vecmat(img, inv) for img in images]
    # find the A-combinations c of O's basis with sum c_j coords_j integral:
    # these form the lattice O-coords cap (coords)^{-1}(A^{nr}); solve via Hermite form
    den = common_denominator(coords)
    scaled = _poly_rows(coords, den)
    F = ext.F
    zero = Poly(F, ())
    one = Poly.const(F, 1)
    nrr = len(scaled[0])
    stacked = []
    for j, row in enumerate(scaled):
        stacked.append(list(row) + [one if k == j else zero for k in range(n)])
    for k in range(nrr):
        stacked.append([den if c == k else zero for c in range(nrr)] + [zero] * n)
    H = hnf(stacked)
    kernel_rows = [row[nrr:] for row in H[nrr:]]
    out = []
    for row in kernel_rows:
        coeffs = [RatFunc(c) for c in row]
        elem = [RatFunc.zero(F)] * n
        for c, b in zip(coeffs, ext.order_basis):
            elem = [e + c * x for e, x in zip(elem, ext.to_beta(b))]
        out.append(elem)
    return ModuleY(ext.q, out)


def contains_element(ext: ExtensionData, Y: ModuleY, a) -> bool:
    return Y.contains(ext.to_beta(a))


def congruence_units(ext: ExtensionData, C: ModuleY, max_power: int = 64) -> list:
    """Generators of O^{(1)}_C = {u in O^x : u = 1 mod C} (m <= 2)."""
    if ext.m == 1:
        return []
    if ext.m > 2:
        raise NotImplementedError("congruence unit groups are implemented for unit rank <= 1")
    u = ext.units[0]
    tors = torsion_elements(ext)
    cur = ext.one()
    for k in range(1, max_power + 1):
        cur = ext.mul(cur, u)
        for z in tors:
            cand = ext.mul(z, cur)
            if contains_element(ext, C, ext.sub(cand, ext.one())):
                return [cand]
    raise DegenerateUnits("no congruence unit found within the search bound")


__all__ = [
    "ExtensionData", "Place", "ValidationFailed", "SchemaError", "DegenerateUnits", "WInL", "ValidationReport",
    "HeegnerParam", "Torus", "load_fixture", "fixture_names", "transition_matrix", "log_abs_det_transition",
    "discriminant_quantity", "ext_validate", "regulator_and_domain", "heegner_param", "canonical_norms",
    "heegner_norm", "heegner_coords", "heegner_discriminant_closed", "orbit_reps", "element_logs",
    "torsion_elements", "annihilator", "span_module", "congruence_units", "torus_for_units", "unit_log_vector",
]
