"""Zeta and Dirichlet L-functions of orders, their Kronecker terms, and an ideal-counting oracle.

Character values are roots of unity zeta_N^e, kept as exponents.  A germ
weighted by character values is an element of Q(zeta_N)[L][[s]], stored as a
map exponent -> TaylorExpansion; exact zero tests reduce modulo the N-th
cyclotomic polynomial.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .eisenstein_multi import (
    cycle_setup,
    multi_eisenstein_numeric,
    multi_germ,
    multi_jacobi_germ,
    multi_jacobi_numeric,
)
from .exact_base import QL, KronError, Poly, RatFunc, TaylorExpansion, parse_ratfunc, taylor_qpow
from .global_ext import ExtensionData, regulator_and_domain
from .lattice_enum import BallTooLarge, ModuleY, lattice_sum, reduce_module

ORACLE_BUDGET = 200_000


class NotAHomomorphism(KronError):
    """Character values are incompatible with the class group law."""


class BadModulus(KronError):
    """The modulus is not a proper ideal of the maximal order."""


class NotCoprime(KronError):
    """A ray representative is not coprime to the modulus."""


# ---------------------------------------------------------------------------
# cyclotomic bookkeeping


def cyclotomic_poly(N: int) -> list[int]:
    """Integer coefficients of Phi_N, lowest degree first."""
    poly = [-1] + [0] * (N - 1) + [1]
    for d in range(1, N):
        if N % d == 0:
            poly = _int_divide(poly, cyclotomic_poly(d))
    return poly


def _int_divide(num: list[int], den: list[int]) -> list[int]:
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1] // den[-1]
        out[i] = c
        for j, d in enumerate(den):
            num[i + j] -= c * d
    return out


def reduce_cyclotomic(coeffs: dict, N: int) -> dict:
    """Remainder of sum c_e x^e modulo Phi_N (exponents taken mod N)."""
    phi = cyclotomic_poly(N)
    deg = len(phi) - 1
    poly = [Fraction(0)] * N
    for e, c in coeffs.items():
        poly[e % N] += Fraction(c)
    for i in range(N - 1, deg - 1, -1):
        c = poly[i]
        if c:
            for j, p in enumerate(phi):
                poly[i - deg + j] -= c * p
    return {e: c for e, c in enumerate(poly[:deg]) if c}


class CycloGerm:
    """sum_e zeta_N^e * expansion_e."""

    def __init__(self, N: int, parts: dict | None = None):
        self.N = N
        self.parts = dict(parts or {})

    def add(self, exponent: int, germ: TaylorExpansion) -> None:
        e = exponent % self.N
        self.parts[e] = self.parts[e] + germ if e in self.parts else germ

    def lift(self, N: int) -> "CycloGerm":
        if N % self.N:
            raise ValueError("can only lift to a multiple of the order")
        k = N // self.N
        return CycloGerm(N, {e * k: g for e, g in self.parts.items()})

    def __add__(self, other: "CycloGerm") -> "CycloGerm":
        N = math.lcm(self.N, other.N)
        a, b = self.lift(N), other.lift(N)
        out = CycloGerm(N, a.parts)
        for e, g in b.parts.items():
            out.add(e, g)
        return out

    @property
    def order(self) -> int:
        return min(g.order for g in self.parts.values())

    def coefficient(self, j: int) -> dict:
        """Coefficient of s^j reduced in Q(zeta_N)[L]: {L-power: {exponent: rational}}."""
        by_power: dict = {}
        for e, g in self.parts.items():
            for p, c in enumerate(g.coeffs[j].c):
                by_power.setdefault(p, {})[e] = c
        out = {}
        for p, vec in sorted(by_power.items()):
            red = reduce_cyclotomic(vec, self.N)
            if red:
                out[p] = red
        return out

    def coefficient_text(self, j: int) -> str:
        """Human-readable s^j coefficient, e.g. ``(1 + 2·zeta^1)·L``."""
        terms = []
        for p, vec in self.coefficient(j).items():
            inner = " + ".join(str(c) if e == 0 else f"{c}·zeta^{e}" for e, c in sorted(vec.items()))
            inner = f"({inner})" if len(vec) > 1 else inner
            terms.append(inner if p == 0 else f"{inner}·L" if p == 1 else f"{inner}·L^{p}")
        return " + ".join(terms) or "0"

    def is_zero_at(self, j: int) -> bool:
        return not self.coefficient(j)

    def rational_part(self, j: int) -> QL | None:
        """The s^j coefficient as an element of Q[L] when it is rational."""
        out = QL()
        for p, vec in self.coefficient(j).items():
            if set(vec) - {0}:
                return None
            out = out + QL.L(vec.get(0, Fraction(0)), p)
        return out

    def evaluate_coefficient(self, j: int, q: int) -> complex:
        total = 0j
        for e, g in self.parts.items():
            total += cmath.exp(2j * math.pi * e / self.N) * g.coeffs[j].evaluate(q)
        return total

    def to_json(self) -> dict:
        out = {"root_order": self.N, "coefficients": []}
        for j in range(self.order + 1):
            coeff = self.coefficient(j)
            out["coefficients"].append({f"L^{p}": {f"zeta^{e}": str(c) for e, c in vec.items()}
                                        for p, vec in coeff.items()})
        return out


# ---------------------------------------------------------------------------
# characters


@dataclass
class CharacterTable:
    group: str
    order: int
    values: list
    modulus: str | None = None

    @classmethod
    def from_json(cls, data: dict, group: str = "pic", modulus: str | None = None) -> "CharacterTable":
        return cls(group, int(data["order"]), [int(v) for v in data["values"]], modulus)

    def to_json(self) -> dict:
        out = {"group": self.group, "order": self.order, "values": self.values}
        if self.modulus is not None:
            out["modulus"] = self.modulus
        return out

    @property
    def is_trivial(self) -> bool:
        return all(v % self.order == 0 for v in self.values)

    def check(self, relations: Sequence[Sequence[int]]) -> None:
        """Each relation (i, j, k) states [I_i][I_j] = [I_k]."""
        h = len(self.values)
        for rel in relations:
            i, j, k = rel
            if max(i, j, k) >= h:
                raise NotAHomomorphism(f"relation {rel} refers to a missing class")
            if (self.values[i] + self.values[j] - self.values[k]) % self.order:
                raise NotAHomomorphism(f"chi(I_{i}) chi(I_{j}) != chi(I_{k})")


def pic_characters(ext: ExtensionData) -> list[CharacterTable]:
    chars = [CharacterTable.from_json(c, "pic") for c in ext.source.get("pic_characters", [])]
    for c in chars:
        c.check(ext.pic_products)
    return chars


def inverse_ideal(ext: ExtensionData, I: ModuleY) -> ModuleY:
    return ext.colon(I)


def class_modules(ext: ExtensionData) -> list[ModuleY]:
    return [ext.module(rep) for rep in ext.class_reps]


# ---------------------------------------------------------------------------
# zeta and ring class L-functions


@dataclass
class LReport:
    checks: list
    germ: CycloGerm
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.get("equal", c.get("within", False)) for c in self.checks)

    def to_json(self) -> dict:
        out = {"checks": self.checks, "germ": self.germ.to_json()}
        out.update(self.details)
        return out


def _class_germs(ext: ExtensionData) -> list:
    return [multi_germ(ext, inverse_ideal(ext, I)) for I in class_modules(ext)]


def zeta_order(ext: ExtensionData, s: float | None = None, tol: float = 1e-10):
    """Germ report of zeta~_O at 0, or the numeric value zeta_O(s) for s > 1."""
    if s is not None:
        return sum(multi_eisenstein_numeric(ext, inverse_ideal(ext, I), None, s, tol) for I in class_modules(ext))
    germs = _class_germs(ext)
    total = CycloGerm(1)
    for g in germs:
        total.add(0, g.expansion)
    R, _ = regulator_and_domain(ext)
    h = len(ext.class_reps)
    expected = QL.L(-Fraction(h) * R / (ext.q_O - 1), ext.m - 1)
    value = total.rational_part(0)
    checks = [{"name": "value at 0", "lhs": str(value), "rhs": str(expected), "equal": value == expected}]
    details = {"class_number": h, "regulator": str(R),
               "per_class": [g.to_json() for g in germs],
               "derivative_at_0": str(total.rational_part(1))}
    return LReport(checks, total, details)


def dirichlet_ring(ext: ExtensionData, chi: CharacterTable) -> LReport:
    chi.check(ext.pic_products)
    germs = _class_germs(ext)
    total = CycloGerm(chi.order)
    for v, g in zip(chi.values, germs):
        total.add(v, g.expansion)
    checks = []
    if not chi.is_trivial:
        checks.append({"name": "value at 0", "lhs": total.coefficient_text(0), "rhs": "0",
                       "equal": total.is_zero_at(0)})
    c = Fraction(math.prod(p.n for p in ext.places), ext.n * (ext.q_O - 1))
    details = {"character": chi.to_json(), "derivative_constant": str(-c),
               "per_class": [g.to_json() for g in germs]}
    return LReport(checks, total, details)


def dirichlet_ring_numeric(ext: ExtensionData, chi: CharacterTable, s: float, tol: float = 1e-10) -> complex:
    total = 0j
    for v, I in zip(chi.values, class_modules(ext)):
        total += cmath.exp(2j * math.pi * v / chi.order) * multi_eisenstein_numeric(ext, inverse_ideal(ext, I), None,
                                                                                    s, tol)
    return total


def character_orthogonality(ext: ExtensionData) -> dict:
    """Sum over all characters of the ring L germs against #Pic times the principal-class germ."""
    chars = pic_characters(ext)
    total = None
    for chi in chars:
        g = dirichlet_ring(ext, chi).germ
        total = g if total is None else total + g
    principal = multi_germ(ext, inverse_ideal(ext, class_modules(ext)[0])).expansion * len(chars)
    diff = total + CycloGerm(1, {0: principal * -1})
    equal = all(diff.is_zero_at(j) for j in range(diff.order + 1))
    return {"name": "character orthogonality", "characters": len(chars), "equal": equal}


# ---------------------------------------------------------------------------
# ray class L-functions


@dataclass
class RayData:
    modulus: RatFunc
    reps: list
    characters: list

    @classmethod
    def from_json(cls, ext: ExtensionData, data: dict) -> "RayData":
        chars = [CharacterTable.from_json(c, "ray", data["modulus"]) for c in data["characters"]]
        return cls(parse_ratfunc(data["modulus"], ext.q), [ext.element(r) for r in data["reps"]], chars)


def ray_data(ext: ExtensionData, index: int = 0) -> RayData:
    return RayData.from_json(ext, ext.ray[index])


def _modulus_ideal(ext: ExtensionData, modulus) -> ModuleY:
    if isinstance(modulus, ModuleY):
        return modulus
    a = ext.element(modulus) if not isinstance(modulus, tuple) else modulus
    return ext.principal(a)


def _validate_ray(ext: ExtensionData, C: ModuleY, reps: Sequence) -> list[ModuleY]:
    if ext.conductor_index_log != 0:
        raise BadModulus("ray class L-functions need the maximal order")
    O = ext.order_module()
    if C.same_module(O):
        raise BadModulus("modulus must be a proper ideal")
    ideals = []
    for rep in reps:
        I = ext.principal(rep)
        if not all(O.contains(row) for row in I.basis):
            raise NotCoprime("representatives must be integral")
        if not lattice_sum(I, C).same_module(O):
            raise NotCoprime(f"representative {ext.fmt(rep)} is not coprime to the modulus")
        ideals.append(I)
    return ideals


def ray_class_index(ext: ExtensionData, modulus: Poly, reps: Sequence, gamma: Poly) -> int:
    """Ray class of (gamma) for K = k: gamma = eps * rep mod the modulus with eps constant."""
    if ext.n != 1:
        raise NotImplementedError("ray classes are located only for K = k")
    F = modulus.F
    for idx, rep in enumerate(reps):
        r = ext.to_beta(rep)[0].split()[0]
        for eps in range(1, F.order):
            if ((gamma.scale(eps) - r) % modulus).is_zero():
                return idx
    raise NotCoprime("element is not coprime to the modulus")


def ray_products(ext: ExtensionData, ray: RayData) -> list[tuple[int, int, int]]:
    """Relations (i, j, k) of the ray class group on the supplied representatives (K = k)."""
    modulus = ray.modulus.split()[0]
    polys = [ext.to_beta(r)[0].split()[0] for r in ray.reps]
    return [(i, j, ray_class_index(ext, modulus, ray.reps, (a * b) % modulus))
            for i, a in enumerate(polys) for j, b in enumerate(polys)]


def dirichlet_ray(ext: ExtensionData, ray: RayData, chi: CharacterTable) -> LReport:
    """Germ of L~^C(s, chi) = ||C||^{-s} sum chi(I) E~^{C I^{-1}}(z_K, 1, s)."""
    C = _modulus_ideal(ext, ray.modulus if ext.n == 1 else ray.modulus)
    ideals = _validate_ray(ext, C, ray.reps)
    if ext.n == 1:
        chi.check(ray_products(ext, ray))
    norm_C = ext.ideal_norm_log(C)
    pref = taylor_qpow(-norm_C, 2)
    total = CycloGerm(chi.order)
    per_class = []
    for v, I in zip(chi.values, ideals):
        L = ext.ideal_product(C, inverse_ideal(ext, I))
        g = multi_jacobi_germ(ext, L, [ext.fmt(ext.one())])
        total.add(v, pref * g.expansion)
        per_class.append(g.to_json())
    checks = [{"name": "value at 0", "lhs": total.coefficient_text(0), "rhs": "0", "equal": total.is_zero_at(0)}]
    return LReport(checks, total, {"character": chi.to_json(), "modulus_norm_log": norm_C, "per_class": per_class})


def dirichlet_ray_numeric(ext: ExtensionData, ray: RayData, chi: CharacterTable, s: float,
                          tol: float = 1e-12) -> complex:
    C = _modulus_ideal(ext, ray.modulus)
    ideals = _validate_ray(ext, C, ray.reps)
    norm_C = ext.ideal_norm_log(C)
    total = 0j
    for v, I in zip(chi.values, ideals):
        L = ext.ideal_product(C, inverse_ideal(ext, I))
        val = multi_jacobi_numeric(ext, L, [ext.fmt(ext.one())], None, s, tol)
        total += cmath.exp(2j * math.pi * v / chi.order) * val
    return ext.q ** (-norm_C * s) * total


def euler_removed_zeta(q: int, prime_degrees, s: float) -> float:
    """zeta_A(s) prod_P (1 - q^{-deg(P) s}) over the primes P dividing the modulus."""
    if isinstance(prime_degrees, int):
        prime_degrees = [prime_degrees]
    out = 1 / (1 - q ** (1 - s))
    for d in prime_degrees:
        out *= 1 - q ** (-d * s)
    return out


def prime_divisor_degrees(modulus: Poly) -> list[int]:
    """Degrees of the distinct monic irreducible factors, by trial division."""
    F = modulus.F
    rest = modulus.monic()
    out = []
    d = 1
    while rest.deg > 0:
        if 2 * d > rest.deg:
            out.append(rest.deg)
            break
        for p in _monic_polys(F, d):
            if (rest % p).is_zero():
                out.append(d)
                while (rest % p).is_zero():
                    rest = rest // p
        d += 1
    return out


def ray_oracle(ext: ExtensionData, ray: RayData, chi: CharacterTable, s: float, max_degree: int) -> tuple[complex, float]:
    """Partial sum over monic f coprime to the modulus (K = k) and a bound on the tail."""
    if ext.n != 1:
        raise NotImplementedError("the ray oracle enumerates monic polynomials of A")
    q = ext.q
    F = ext.F
    modulus = ray.modulus.split()[0]
    total = 0j
    for d in range(max_degree + 1):
        for tail in itertools.product(range(q), repeat=d):
            f = Poly(F, tuple(tail) + (1,))
            if f.gcd(modulus).deg > 0:
                continue
            v = chi.values[ray_class_index(ext, modulus, ray.reps, f % modulus)]
            total += cmath.exp(2j * math.pi * v / chi.order) * q ** (-d * s)
    rho = q ** (1 - s)
    return total, rho ** (max_degree + 1) / (1 - rho)


# ---------------------------------------------------------------------------
# ideal-counting oracle


def _monic_polys(F, d: int):
    for tail in itertools.product(range(F.order), repeat=d):
        yield Poly(F, tuple(tail) + (1,))


def _polys_below(F, d: int):
    for cs in itertools.product(range(F.order), repeat=d):
        yield Poly(F, tuple(cs))


def _sublattices(F, n: int, d: int):
    """Hermite forms over A of index q^d in A^n."""
    for degs in itertools.product(range(d + 1), repeat=n):
        if sum(degs) != d:
            continue
        diag_choices = [list(_monic_polys(F, k)) for k in degs]
        off = [(i, j) for i in range(n) for j in range(i + 1, n)]
        off_choices = [list(_polys_below(F, degs[j])) for _, j in off]
        for diag in itertools.product(*diag_choices):
            for offs in itertools.product(*off_choices):
                H = [[Poly(F, ()) for _ in range(n)] for _ in range(n)]
                for i in range(n):
                    H[i][i] = diag[i]
                for (i, j), p in zip(off, offs):
                    H[i][j] = p
                yield H


def _lattice_count(q: int, n: int, d: int) -> int:
    total = 0
    for degs in itertools.product(range(d + 1), repeat=n):
        if sum(degs) == d:
            total += math.prod(q ** (k * j) for j, k in enumerate(degs))
    return total


def ideal_from_hnf(ext: ExtensionData, H) -> ModuleY:
    F = ext.F
    elems = []
    for row in H:
        coords = [RatFunc.zero(F)] * ext.n
        for c, w in zip(row, ext.order_basis):
            coords = [a + RatFunc(c) * b for a, b in zip(coords, ext.to_beta(w))]
        elems.append(coords)
    return ModuleY(ext.q, elems)


def is_principal(ext: ExtensionData, J: ModuleY) -> bool:
    """m = 1: J is principal iff some nonzero element has norm ||J||_O."""
    if ext.m != 1:
        if len(ext.class_reps) == 1:
            return True
        raise NotImplementedError("principality is decided only for m = 1 or class number one")
    bound = Fraction(ext.ideal_norm_log(J), ext.n)
    setup = cycle_setup(ext, J)
    return reduce_module(J, setup.norm_at([-bound])).count(0) > 1


def class_of(ext: ExtensionData, J: ModuleY) -> int:
    if len(ext.class_reps) == 1:
        return 0
    for idx, I in enumerate(class_modules(ext)):
        if is_principal(ext, ext.ideal_product(J, inverse_ideal(ext, I))):
            return idx
    raise KronError("ideal matches no supplied class")


@dataclass
class OracleResult:
    counts: list  # (d, count)
    by_class: list  # (d, [count per class]) when requested

    def to_json(self) -> dict:
        return {"counts": [[str(d), c] for d, c in self.counts],
                "by_class": [[str(d), cs] for d, cs in self.by_class]}


def ideal_count_oracle(ext: ExtensionData, norm_bound_log, *, by_class: bool = False,
                       budget: int = ORACLE_BUDGET) -> OracleResult:
    """Invertible integral ideals of O with log_q norm d <= bound, by enumerating Hermite forms."""
    bound = Fraction(norm_bound_log)
    F = ext.F
    n = ext.n
    maximal = ext.conductor_index_log == 0
    counts, classes = [], []
    d = 0
    while d <= bound:
        if _lattice_count(ext.q, n, d) > budget:
            raise BallTooLarge(f"{_lattice_count(ext.q, n, d)} sublattices of index q^{d}")
        c = 0
        per_class = [0] * len(ext.class_reps)
        for H in _sublattices(F, n, d):
            J = ideal_from_hnf(ext, H)
            if not ext.is_o_stable(J):
                continue
            if not maximal and not ext.is_invertible(J):
                continue
            c += 1
            if by_class:
                per_class[class_of(ext, J)] += 1
        if c:
            counts.append((d, c))
            if by_class:
                classes.append((d, per_class))
        d += 1
    return OracleResult(counts, classes)


def zeta_tail_bound(q: int, n: int, d_max: int, s: float, terms: int = 4000) -> float:
    """Bound on sum_{d > d_max} a_d q^{-ds} from a_d <= binom(d+n-1, n-1) q^d (maximal orders)."""
    total = 0.0
    for d in range(d_max + 1, d_max + 1 + terms):
        term = math.comb(d + n - 1, n - 1) * q ** (d * (1 - s))
        total += term
        if term < 1e-18 * max(total, 1e-300):
            break
    return total


def oracle_zeta_check(ext: ExtensionData, s: float, d_max: int, tol: float = 1e-12) -> dict:
    if ext.conductor_index_log != 0:
        raise ValueError("the tail bound holds for maximal orders")
    res = ideal_count_oracle(ext, d_max)
    partial = math.fsum(c * ext.q ** (-float(d) * s) for d, c in res.counts)
    tail = zeta_tail_bound(ext.q, ext.n, d_max, s)
    value = zeta_order(ext, s, tol)
    diff = value - partial
    return {"name": f"zeta({s}) vs oracle", "pipeline": value, "partial_sum": partial, "tail_bound": tail,
            "within": -tol <= diff <= tail + tol, "counts": res.to_json()["counts"]}


def class_level_counts(ext: ExtensionData, max_level: int) -> list[dict]:
    """Per class I: number of integral ideals J in [I] with log norm d, from the Eisenstein pipeline."""
    from .eisenstein_multi import multi_level_counts

    return [multi_level_counts(ext, inverse_ideal(ext, I), max_level) for I in class_modules(ext)]


__all__ = [
    "CharacterTable", "CycloGerm", "LReport", "NotAHomomorphism", "BadModulus", "NotCoprime", "RayData",
    "cyclotomic_poly", "reduce_cyclotomic", "pic_characters", "zeta_order", "dirichlet_ring",
    "dirichlet_ring_numeric", "character_orthogonality", "ray_data", "dirichlet_ray", "dirichlet_ray_numeric",
    "euler_removed_zeta", "prime_divisor_degrees", "ray_oracle", "ray_products", "ideal_count_oracle", "is_principal", "class_of",
    "zeta_tail_bound", "oracle_zeta_check", "class_level_counts", "OracleResult",
]
