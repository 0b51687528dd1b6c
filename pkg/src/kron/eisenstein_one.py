"""One-variable Eisenstein and Jacobi series for a free A-module Y in k^r.

For a point z, represented by its norm nu, the series

    E^Y(z, s) = ||Y||^s im(z)^s sum_{0 != lambda in Y} nu(lambda)^{-rs}

is continued to all s through the finite coset formula over (1/a)Y/Y:

    E^Y(z, s) = ||Y||^s im(z)^s / (|a|^{rs} - |a|^r) * sum_{0 != w} bracket_w(s),
    bracket_w(s) = sum_{lambda in Y, nu(lambda) <= nu(w)} nu(lambda - w)^{-rs}
                   - sum_{0 != lambda in Y, nu(lambda) <= nu(w)} nu(lambda)^{-rs}.

Every bracket is a finite exponential sum in s whose exponents and
multiplicities come from a reduced basis of Y, so the germ at s = 0 is exact
in Q[L] with L = ln q.  All logarithms below are base q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .exact_base import (
    ExpSum,
    KronError,
    QL,
    RatFunc,
    TaylorExpansion,
    parse_ratfunc,
    taylor_qpow,
    taylor_read,
)
from .gi_norms import Norm, lattice_discriminant
from .lattice_enum import (
    ModuleY,
    ReducedModule,
    ball_distribution,
    cosets_mod,
    reduce_module,
    shifted_count,
    vector_value,
)

DEFAULT_MARGIN = 0.05
MAX_WINDOWS = 4000


class WInY(KronError):
    """The shift vector lies in the module."""


class SlowConvergence(KronError):
    """Direct summation cannot reach the tolerance within the budget."""


@dataclass
class EisensteinGerm:
    """Germ at s = 0 together with the exact continuation data.

    The continuation is ``q^(alpha s) * (bracket_sum(s) / (q^(r deg a s) - q^(r deg a))
    + correction(s))``; ``correction`` is empty for the plain series.
    """

    expansion: TaylorExpansion
    q: int
    r: int
    prefactor: Fraction
    bracket_sum: ExpSum
    deg_a: int
    correction: ExpSum = field(default_factory=ExpSum)
    provenance: str = "T"
    numeric_evaluator: Callable | None = field(default=None, repr=False)

    @property
    def value_at_0(self) -> QL:
        return self.expansion.coeffs[0]

    @property
    def derivative_at_0(self) -> QL:
        return self.expansion.coeffs[1]

    def evaluate(self, s: float) -> float:
        """Numeric value of the continuation at real s (s != 1)."""
        q, rd = self.q, self.r * self.deg_a
        lq = math.log(q)
        denom = math.exp(rd * s * lq) - q**rd
        main = self.bracket_sum.evaluate(s, q) / denom
        return math.exp(float(self.prefactor) * s * lq) * (main + self.correction.evaluate(s, q))

    def to_json(self) -> dict:
        return {
            "expansion": self.expansion.to_json(),
            "value_at_0": str(self.value_at_0),
            "derivative_at_0": str(self.derivative_at_0),
            "q": self.q,
            "r": self.r,
            "a": self.provenance,
        }


def _as_poly(a, q: int) -> RatFunc:
    return a if isinstance(a, RatFunc) else parse_ratfunc(a, q)


def _as_vector(w, q: int) -> list[RatFunc]:
    return [x if isinstance(x, RatFunc) else parse_ratfunc(x, q) for x in w]


def coset_bracket(red: ReducedModule, w_coords: list[RatFunc], r: int) -> ExpSum:
    """bracket_w as an exponential sum; exponent of q^(alpha s) is -r * value."""
    V = vector_value(red, w_coords)
    box = red.degree_box(V)
    zero = [RatFunc.zero(red.Y.F)] * red.rank
    out = ExpSum()
    for v, c in ball_distribution(red, w_coords, box).items():
        out.add_term(-r * v, c)
    for v, c in ball_distribution(red, zero, box).items():
        if v is not None:
            out.add_term(-r * v, -c)
    return out


def _klein_from_coords(red: ReducedModule, w_coords: list[RatFunc]) -> Fraction:
    V = vector_value(red, w_coords)
    box = red.degree_box(V)
    zero = [RatFunc.zero(red.Y.F)] * red.rank
    total = Fraction(0)
    for v, c in ball_distribution(red, w_coords, box).items():
        total -= v * c
    for v, c in ball_distribution(red, zero, box).items():
        if v is not None:
            total += v * c
    return total


def _coords_outside(red: ReducedModule, w) -> list[RatFunc]:
    coords = red.coordinates(w)
    if all(c.is_poly() for c in coords):
        raise WInY("w lies in Y")
    return coords


def _setup(Y: ModuleY, nu: Norm):
    red = reduce_module(Y, nu)
    return red, Fraction(Y.log_norm()) + lattice_discriminant(nu).value


def coset_sum(red: ReducedModule, a: RatFunc, r: int) -> ExpSum:
    total = ExpSum()
    for w in cosets_mod(red.Y, a)[1:]:
        total = total + coset_bracket(red, red.coordinates(w), r)
    return total


def eisenstein_expansion(Y: ModuleY, nu: Norm, a="T", order: int = 2) -> EisensteinGerm:
    q, r = Y.q, Y.rank
    a = _as_poly(a, q)
    red, prefactor = _setup(Y, nu)
    S = coset_sum(red, a, r)
    rd = r * a.degree()
    denom = taylor_qpow(rd, order) - TaylorExpansion.constant(q**rd, order)
    expansion = taylor_qpow(prefactor, order) * S.to_taylor(order) / denom
    germ = EisensteinGerm(expansion, q, r, prefactor, S, a.degree(), provenance=a.to_str())
    germ.numeric_evaluator = lambda s, tol=1e-10: eisenstein_numeric(Y, nu, s, tol, reduced=red)
    return germ


def _window_values(levels, lo: Fraction, hi: Fraction) -> list[Fraction]:
    """All values d_i + m (m integer) in the half-open window (lo, hi]."""
    out = set()
    for d in levels:
        m = math.floor(lo - d) + 1
        while d + m <= hi:
            out.add(d + m)
            m += 1
    return sorted(out)


def _direct_sum(count: Callable, levels, start: Fraction, base: int, r: int, s: float, q: int, tol: float,
                scale: float) -> tuple[float, float]:
    """Sum count-increments * q^{-r s v} window by window with a geometric tail bound."""
    lq = math.log(q)
    rho = q ** (r * (1 - s))
    steady = max(levels) + 1
    prev = base
    total = 0.0
    lo = Fraction(start)
    for _ in range(MAX_WINDOWS):
        hi = lo + 1
        window = 0.0
        for v in _window_values(levels, lo, hi):
            c = count(v)
            if c != prev:
                window += (c - prev) * math.exp(-r * s * float(v) * lq)
                prev = c
        total += window
        if hi >= steady:
            tail = window * rho / (1 - rho)
            if tail * scale < tol:
                return total * scale, tail * scale
        lo = hi
    raise SlowConvergence(f"no convergence to {tol} within {MAX_WINDOWS} windows")


def eisenstein_numeric(Y: ModuleY, nu: Norm, s: float, tol: float = 1e-10, *, margin: float = DEFAULT_MARGIN,
                       reduced: ReducedModule | None = None) -> float:
    """Direct summation of the defining series for real s > 1."""
    s = float(s)
    if s <= 1 + margin:
        raise SlowConvergence(f"s = {s} is too close to the abscissa of convergence")
    red = reduced or reduce_module(Y, nu)
    q, r = Y.q, Y.rank
    prefactor = Fraction(Y.log_norm()) + lattice_discriminant(nu).value
    scale = q ** (float(prefactor) * s)
    start = min(red.levels) - 1
    total, _ = _direct_sum(red.count, red.levels, start, 1, r, s, q, tol, scale)
    return total


def jacobi_numeric(Y: ModuleY, nu: Norm, w, s: float, tol: float = 1e-10, *,
                   margin: float = DEFAULT_MARGIN) -> float:
    """Direct summation of ||Y||^s im^s sum_{lambda in Y} nu(lambda - w)^{-rs}."""
    s = float(s)
    if s <= 1 + margin:
        raise SlowConvergence(f"s = {s} is too close to the abscissa of convergence")
    q, r = Y.q, Y.rank
    red = reduce_module(Y, nu)
    coords = _coords_outside(red, _as_vector(w, q))
    fracs = [c.split()[1] for c in coords]
    start = max(d + f.degree() for d, f in zip(red.levels, fracs) if not f.is_zero()) - 1
    prefactor = Fraction(Y.log_norm()) + lattice_discriminant(nu).value
    scale = q ** (float(prefactor) * s)
    count = lambda v: shifted_count(red, coords, v)
    if count(start):
        raise AssertionError("lower summation bound is not below the minimum")
    total, _ = _direct_sum(count, red.levels, start, 0, r, s, q, tol, scale)
    return total


def klein_log(Y: ModuleY, nu: Norm, w) -> Fraction:
    """log_q |k_w^Y(z)|."""
    red = reduce_module(Y, nu)
    return _klein_from_coords(red, _coords_outside(red, _as_vector(w, Y.q)))


def delta_a_log(Y: ModuleY, nu: Norm, a="T") -> Fraction:
    """log_q |Delta_a^Y(z)| = deg a + sum of Klein logs over nonzero cosets."""
    a = _as_poly(a, Y.q)
    red = reduce_module(Y, nu)
    total = Fraction(a.degree())
    for w in cosets_mod(Y, a)[1:]:
        total += _klein_from_coords(red, red.coordinates(w))
    return total


def delta_log(Y: ModuleY, nu: Norm, a="T") -> Fraction:
    a = _as_poly(a, Y.q)
    q, r = Y.q, Y.rank
    return Fraction(q**r - 1, q ** (r * a.degree()) - 1) * delta_a_log(Y, nu, a)


def eta_log(Y: ModuleY, nu: Norm, a="T") -> Fraction:
    """log_q of the absolute discriminant ||Y|| im(z) |Delta^Y(z)|^{r/(q^r-1)}."""
    q, r = Y.q, Y.rank
    return (Fraction(Y.log_norm()) + lattice_discriminant(nu).value
            + Fraction(r, q**r - 1) * delta_log(Y, nu, a))


def jacobi_expansion(Y: ModuleY, nu: Norm, w, a="T", order: int = 2) -> EisensteinGerm:
    q, r = Y.q, Y.rank
    base = eisenstein_expansion(Y, nu, a, order)
    red = reduce_module(Y, nu)
    corr = coset_bracket(red, _coords_outside(red, _as_vector(w, q)), r)
    expansion = base.expansion + taylor_qpow(base.prefactor, order) * corr.to_taylor(order)
    germ = EisensteinGerm(expansion, q, r, base.prefactor, base.bracket_sum, base.deg_a, corr, base.provenance)
    germ.numeric_evaluator = lambda s, tol=1e-10: jacobi_numeric(Y, nu, w, s, tol)
    return germ


@dataclass
class LimitReport:
    lhs: QL
    rhs: QL
    details: dict = field(default_factory=dict)

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs

    def to_json(self) -> dict:
        out = {"lhs": self.lhs.to_json(), "rhs": self.rhs.to_json(), "lhs_text": str(self.lhs),
               "rhs_text": str(self.rhs), "equal": self.equal}
        out.update({k: (str(v) if isinstance(v, (Fraction, QL)) else v) for k, v in self.details.items()})
        return out


def limit_check_first(Y: ModuleY, nu: Norm, a="T") -> LimitReport:
    """Derivative of E^Y(z, s) at 0 against -ln eta(z)."""
    germ = eisenstein_expansion(Y, nu, a)
    eta = eta_log(Y, nu, a)
    return LimitReport(germ.derivative_at_0, QL.L(-eta), {"eta_log": eta, "value_at_0": germ.value_at_0})


def limit_check_second(Y: ModuleY, nu: Norm, w, a="T") -> LimitReport:
    """Derivative of E^Y(z, w, s) at 0 against (r/(q^r-1)) ln |u_w(z)|."""
    q, r = Y.q, Y.rank
    germ = jacobi_expansion(Y, nu, w, a)
    kl = klein_log(Y, nu, w)
    dl = delta_log(Y, nu, a)
    u_log = (q**r - 1) * kl - dl
    rhs = QL.L(Fraction(r, q**r - 1) * u_log)
    return LimitReport(germ.derivative_at_0, rhs,
                       {"klein_log": kl, "delta_log": dl, "u_log": u_log, "value_at_0": germ.value_at_0})


def germ_values(germ: EisensteinGerm) -> tuple[QL, QL]:
    return taylor_read(germ.expansion)


__all__ = [
    "EisensteinGerm", "LimitReport", "WInY", "SlowConvergence", "eisenstein_expansion", "eisenstein_numeric",
    "jacobi_numeric", "klein_log", "delta_a_log", "delta_log", "eta_log", "jacobi_expansion",
    "limit_check_first", "limit_check_second", "coset_bracket", "coset_sum",
]
