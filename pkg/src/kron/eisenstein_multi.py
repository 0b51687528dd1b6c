"""Several-variable Eisenstein and Jacobi series attached to an order O of K.

Two independent pipelines are provided.

* Direct sums over (L - 0)/O^x.  Orbits are counted, not enumerated: for a
  box of log-levels B = (B_1..B_m) the number of lambda in L with
  nu_i(lambda)/n_i <= B_i for all i is a ball count for the Heegner norm at
  t = -B, so exact cell counts follow by inclusion-exclusion.  The free part
  of the unit group is quotiented by keeping the cells whose projected log
  vector lies in the fundamental parallelepiped of the regulator torus; the
  constants F_O^x act freely and divide the count by q_O - 1.

* The torus integral of the one-variable series E^{Y_L} along the Heegner
  cycle.  For m = 1 the torus is a point and everything is exact in Q[L].
  For m >= 2 the integral is taken by adaptive quadrature; the germ at s = 0
  integrates the exact, piecewise-linear log absolute discriminant.

Logs are base q throughout; the torus coordinate t' is in base-q units, so the
natural-log measure dt picks up a factor L^{m-1} with L = ln q.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .eisenstein_one import (
    SlowConvergence,
    eisenstein_expansion,
    eta_log,
    jacobi_expansion,
    klein_log,
    delta_log,
)
from .exact_base import (
    KronError,
    QL,
    RatFunc,
    TaylorExpansion,
    base_field,
    with_precision_retry,
)
from .gi_norms import Norm, lattice_discriminant
from .global_ext import (
    ExtensionData,
    HeegnerParam,
    Torus,
    WInL,
    annihilator,
    canonical_norms,
    congruence_units,
    discriminant_quantity,
    heegner_coords,
    heegner_param,
    torus_for_units,
)
from .lattice_enum import ModuleY, reduce_module, shifted_count

DEFAULT_MARGIN = 0.05
GAUSS_NODES = 8
MAX_DEPTH = 14


class QuadratureStall(KronError):
    """Adaptive quadrature could not reach the tolerance."""


@dataclass
class MultiGerm:
    expansion: TaylorExpansion
    quadrature_error: float
    mode: str
    details: dict = field(default_factory=dict)

    @property
    def value_at_0(self) -> QL:
        return self.expansion.coeffs[0]

    @property
    def derivative_at_0(self) -> QL:
        return self.expansion.coeffs[1]

    def to_json(self) -> dict:
        out = {"expansion": self.expansion.to_json(), "value_at_0": str(self.value_at_0),
               "derivative_at_0": str(self.derivative_at_0), "mode": self.mode,
               "quadrature_error": self.quadrature_error}
        out.update(self.details)
        return out


# ---------------------------------------------------------------------------
# setup shared by both pipelines


@dataclass
class CycleSetup:
    """Everything needed to evaluate Heegner norms along the cycle."""

    param: HeegnerParam
    L: ModuleY
    nus: list
    coords: list
    weights: list
    sizes: list
    torus: Torus
    shift: list | None = None

    @property
    def ext(self) -> ExtensionData:
        return self.param.ext

    @property
    def r(self) -> int:
        return self.param.r

    def norm_at(self, t: Sequence) -> Norm:
        out = []
        idx = 0
        for size, ti in zip(self.sizes, t):
            out.extend(w - Fraction(ti) for w in self.weights[idx:idx + size])
            idx += size
        return Norm(base_field(self.ext.q), self.coords, out)

    def cycle_norm(self, tp: Sequence) -> Norm:
        """Norm of g_{o,r} z(z; (0, t'))."""
        return self.norm_at([Fraction(0)] + [Fraction(x) for x in tp])

    def prefactor(self) -> Fraction:
        """log_q (||L||_O prod im(z_i))."""
        return Fraction(self.ext.ideal_norm_log(self.L)) + sum(lattice_discriminant(nu).value for nu in self.nus)

    def grid_denominators(self) -> list[int]:
        dens = []
        for p, nu in zip(self.ext.places, self.nus):
            d = p.e
            for c in nu.weights:
                d = math.lcm(d, (Fraction(c) / p.n).denominator)
            dens.append(d)
        return dens


def _as_module(ext: ExtensionData, L, r: int) -> ModuleY:
    if isinstance(L, ModuleY):
        return L
    if L is None:
        return ext.order_module(r)
    return ext.module(L, r)


def cycle_setup(ext: ExtensionData, L=None, nus=None, r: int = 1, *, units=None, shift=None) -> CycleSetup:
    param = heegner_param(ext, r)
    Y = _as_module(ext, L, r)
    nus = list(nus) if nus is not None else canonical_norms(ext, r)
    coords, weights, sizes = heegner_coords(param, nus)
    torus = param.torus if units is None else (torus_for_units(ext, units) if ext.m > 1 else Torus(1, []))
    return CycleSetup(param, Y, nus, coords, list(weights), sizes, torus, shift)


def _shift_vector(ext: ExtensionData, w, r: int) -> list[RatFunc]:
    """w in k^{nr} from an element list of K^r (Eq. w ordering: l outer, t inner)."""
    if len(w) == ext.n * r and all(isinstance(x, RatFunc) for x in w):
        return list(w)
    out = []
    for a in w:
        out.extend(ext.to_beta(ext.element(a)))
    return out


# ---------------------------------------------------------------------------
# direct sums


@dataclass
class CellSum:
    value: float
    tail: float
    level_counts: dict


def _cell_sum(setup: CycleSetup, s: float, tol: float, *, torsion_divisor: int, max_level=None) -> CellSum:
    ext = setup.ext
    q, r, m = ext.q, setup.r, ext.m
    ns = [p.n for p in ext.places]
    n = ext.n
    dens = setup.grid_denominators()
    Y = setup.L
    shift = setup.shift
    base_count = 1 if shift is None else 0

    cache = {}

    def C(B):
        key = tuple(B)
        if key not in cache:
            red = reduce_module(Y, setup.norm_at([-b for b in B]))
            cache[key] = red.count(0) if shift is None else shifted_count(red, red.coordinates(shift), 0)
        return cache[key]

    def cell(ell):
        total = 0
        for S in itertools.product((0, 1), repeat=m):
            B = [e - Fraction(si, d) for e, si, d in zip(ell, S, dens)]
            total += (-1) ** sum(S) * C(B)
        return total

    torus = setup.torus
    box = torus.box() if m > 1 else []
    highs = [Fraction(0)] + [hi for _, hi in box]
    lows = [Fraction(0)] + [lo for lo, _ in box]
    X = Fraction(0)
    while C([X + h for h in highs]) != base_count:
        X -= 1
    lq = math.log(q)
    prefactor = float(setup.prefactor())
    rho_theory = q ** (n * r * (1 - s))
    total = 0.0
    windows = []
    counts: dict = {}
    lo1 = X
    for _ in range(4000):
        hi1 = lo1 + 1
        window = 0.0
        l1 = lo1 + Fraction(1, dens[0])
        while l1 <= hi1:
            ranges = []
            for i in range(1, m):
                d = dens[i]
                start = math.ceil((l1 + lows[i]) * d)
                stop = math.floor((l1 + highs[i]) * d)
                ranges.append([Fraction(k, d) - l1 for k in range(start, stop + 1)])
            for tp in itertools.product(*ranges):
                if m > 1 and not torus.contains(list(tp)):
                    continue
                ell = [l1] + [l1 + x for x in tp]
                c = cell(ell)
                if c:
                    level = sum(ni * li for ni, li in zip(ns, ell))
                    counts[level] = counts.get(level, 0) + c
                    window += c * math.exp((prefactor * s - r * s * float(level)) * lq)
            l1 += Fraction(1, dens[0])
        total += window
        windows.append(window)
        lo1 = hi1
        if max_level is not None:
            if n * lo1 + sum(ni * lo for ni, lo in zip(ns, lows)) > max_level:
                break
            continue
        nonzero = [w for w in windows if w > 0]
        if len(nonzero) >= 3:
            ratio = windows[-1] / windows[-2] if windows[-2] > 0 else rho_theory
            rho = max(rho_theory, ratio)
            if rho < 1:
                tail = windows[-1] * rho / (1 - rho)
                if tail / torsion_divisor < tol:
                    return CellSum(total / torsion_divisor, tail / torsion_divisor, counts)
    if max_level is not None:
        return CellSum(total / torsion_divisor, float("nan"), counts)
    raise SlowConvergence("orbit sum did not converge")


def multi_eisenstein_numeric(ext: ExtensionData, L=None, nus=None, s: float = 2.0, tol: float = 1e-10, *,
                             r: int = 1, margin: float = DEFAULT_MARGIN) -> float:
    """E_O^L(z, s) by direct summation over orbits."""
    s = float(s)
    if s <= 1 + margin:
        raise SlowConvergence(f"s = {s} is too close to the abscissa of convergence")

    def run():
        setup = cycle_setup(ext, L, nus, r)
        return _cell_sum(setup, s, tol, torsion_divisor=ext.q_O - 1).value

    return with_precision_retry(run)


def multi_level_counts(ext: ExtensionData, L=None, max_level: int = 4, nus=None, *, r: int = 1,
                       shift=None, units=None, torsion: bool = True) -> dict:
    """Number of orbits per value of log_q ||lambda L^{-1}|| (or of w + L), up to max_level."""
    setup = cycle_setup(ext, L, nus, r, units=units,
                        shift=None if shift is None else _shift_vector(ext, shift, r))
    norm_L = Fraction(ext.ideal_norm_log(setup.L))
    res = _cell_sum(setup, 2.0, 0.0, torsion_divisor=1, max_level=max_level + norm_L)
    div = ext.q_O - 1 if (torsion and shift is None) else 1
    out = {}
    for level, c in sorted(res.level_counts.items()):
        d = level - norm_L
        if d <= max_level:
            if c % div:
                raise AssertionError("torsion does not act freely")
            out[d] = c // div
    return out


def _jacobi_setup(ext: ExtensionData, L, w, nus, r: int) -> tuple[CycleSetup, ModuleY]:
    Y = _as_module(ext, L, r)
    wv = _shift_vector(ext, w, r)
    if Y.contains(wv):
        raise WInL("w lies in L")
    C = annihilator(ext, Y, wv)
    units = congruence_units(ext, C)
    setup = cycle_setup(ext, Y, nus, r, units=units, shift=wv)
    return setup, C


def multi_jacobi_numeric(ext: ExtensionData, L, w, nus=None, s: float = 2.0, tol: float = 1e-10, *,
                         r: int = 1, margin: float = DEFAULT_MARGIN) -> float:
    """E_O^L(z, w, s): sum over (w + L) / O^{(1)}_{C_w}."""
    s = float(s)
    if s <= 1 + margin:
        raise SlowConvergence(f"s = {s} is too close to the abscissa of convergence")

    def run():
        setup, _ = _jacobi_setup(ext, L, w, nus, r)
        return _cell_sum(setup, s, tol, torsion_divisor=1).value

    return with_precision_retry(run)


# ---------------------------------------------------------------------------
# torus quadrature


_GL_CACHE = {}


def _gauss(nodes: int):
    if nodes not in _GL_CACHE:
        _GL_CACHE[nodes] = np.polynomial.legendre.leggauss(nodes)
    return _GL_CACHE[nodes]


def _gl(f: Callable[[Fraction], float], a: Fraction, b: Fraction, nodes: int = GAUSS_NODES) -> float:
    x, w = _gauss(nodes)
    mid, half = (a + b) / 2, (b - a) / 2
    return float(half) * math.fsum(float(wi) * f(mid + half * Fraction(float(xi))) for xi, wi in zip(x, w))


def _adaptive(f, a, b, tol, depth=0):
    whole = _gl(f, a, b)
    m = (a + b) / 2
    left, right = _gl(f, a, m), _gl(f, m, b)
    err = abs(left + right - whole)
    if err <= tol or depth >= MAX_DEPTH:
        if err > tol:
            raise QuadratureStall(f"no convergence on [{a}, {b}]")
        return left + right, err
    l, el = _adaptive(f, a, m, tol / 2, depth + 1)
    rr, er = _adaptive(f, m, b, tol / 2, depth + 1)
    return l + rr, el + er


def _torus_interval(setup: CycleSetup) -> tuple[Fraction, Fraction]:
    if setup.ext.m != 2:
        raise NotImplementedError("torus quadrature is implemented for m <= 2")
    v = setup.torus.vectors[0][0]
    return (min(Fraction(0), v), max(Fraction(0), v))


def _cells(setup: CycleSetup, a: Fraction, b: Fraction) -> list[tuple[Fraction, Fraction]]:
    den = 2 * math.lcm(*setup.grid_denominators())
    pts = sorted({a, b} | {Fraction(k, den) for k in range(math.ceil(a * den), math.floor(b * den) + 1)})
    return list(zip(pts[:-1], pts[1:]))


def torus_integral(setup: CycleSetup, f: Callable[[Fraction], float], tol: float = 1e-10) -> tuple[float, float]:
    """Integral over the fundamental domain in base-q units (m = 2)."""
    a, b = _torus_interval(setup)
    total, err = 0.0, 0.0
    cells = _cells(setup, a, b)
    for lo, hi in cells:
        v, e = _adaptive(f, lo, hi, tol / len(cells))
        total += v
        err += e
    return total, err


def exact_linear_integral(setup: CycleSetup, f: Callable[[Fraction], Fraction]) -> Fraction:
    """Exact integral of a piecewise-linear rational function over the torus (m = 2).

    Cells are split until f is affine on them, checked at the midpoint and
    the quarter points.
    """
    a, b = _torus_interval(setup)
    total = Fraction(0)
    stack = list(_cells(setup, a, b))
    values = {}

    def val(x):
        if x not in values:
            values[x] = Fraction(f(x))
        return values[x]

    steps = 0
    while stack:
        lo, hi = stack.pop()
        steps += 1
        if steps > 20000:
            raise QuadratureStall("piecewise-linear integration did not settle")
        fa, fb = val(lo), val(hi)
        w = hi - lo
        ok = all(val(lo + w * k / 4) == fa + (fb - fa) * Fraction(k, 4) for k in (1, 2, 3))
        if ok:
            total += w * (fa + fb) / 2
        else:
            mid = (lo + hi) / 2
            stack.append((lo, mid))
            stack.append((mid, hi))
    return total


# ---------------------------------------------------------------------------
# integral representation and limit formulas


def _scale_factor(ext: ExtensionData) -> Fraction:
    """(n_1...n_m) / n."""
    return Fraction(math.prod(p.n for p in ext.places), ext.n)


def integral_representation(ext: ExtensionData, L=None, nus=None, s=None, *, r: int = 1, tol: float = 1e-9):
    """Left side of the torus-integral identity.

    With ``s`` given, returns (value, quadrature_error) of
    (rs)^{m-1}/(q_O-1) (n_1..n_m/n) int E^{Y_L}(g z(t), s) dt, which equals
    d(O/A)^{rs/2} E_O^L(z, s).  Without ``s`` returns the germ of
    E~(z, s) = d^{rs/2} (rs)^{1-m} E_O^L(z, s) at s = 0 as a ``MultiGerm``.
    """
    if s is None:
        return multi_germ(ext, L, nus, r=r)
    s = float(s)
    setup = cycle_setup(ext, L, nus, r)
    m = ext.m
    lq = math.log(ext.q)
    const = (r * s) ** (m - 1) / (ext.q_O - 1) * float(_scale_factor(ext))
    if m == 1:
        germ = eisenstein_expansion(setup.L, setup.cycle_norm([]))
        return const * germ.evaluate(s), 0.0
    f = lambda tp: eisenstein_expansion(setup.L, setup.cycle_norm([tp])).evaluate(s)
    val, err = torus_integral(setup, f, tol)
    jac = lq ** (m - 1)
    return const * jac * val, const * jac * err


def rhs_normalized(ext: ExtensionData, value: float, s: float, r: int = 1) -> float:
    """d(O/A)^{rs/2} * value."""
    return ext.q ** (float(discriminant_quantity(ext)) * r * s / 2) * value


def multi_germ(ext: ExtensionData, L=None, nus=None, *, r: int = 1) -> MultiGerm:
    setup = cycle_setup(ext, L, nus, r)
    m = ext.m
    c = _scale_factor(ext) / (ext.q_O - 1)
    if m == 1:
        germ = eisenstein_expansion(setup.L, setup.cycle_norm([]))
        return MultiGerm(germ.expansion * c, 0.0, "exact", {"eta_log": str(eta_log(setup.L, setup.cycle_norm([])))})
    vol = setup.torus.volume
    eta_int = exact_linear_integral(setup, lambda tp: eta_log(setup.L, setup.cycle_norm([tp])))
    value = QL.L(-c * vol, m - 1)
    deriv = QL.L(-c * eta_int, m)
    return MultiGerm(TaylorExpansion([value, deriv], 1), 0.0, "quadrature",
                     {"eta_integral": str(eta_int), "torus_volume": str(vol)})


@dataclass
class MultiReport:
    checks: list
    germ: MultiGerm
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.get("equal", c.get("within", False)) for c in self.checks)

    def to_json(self) -> dict:
        out = {"checks": self.checks, "germ": self.germ.to_json()}
        out.update(self.details)
        return out


def multi_limit_first(ext: ExtensionData, L=None, nus=None, *, r: int = 1) -> MultiReport:
    from .global_ext import regulator_and_domain

    germ = multi_germ(ext, L, nus, r=r)
    R, torus = regulator_and_domain(ext)
    c = _scale_factor(ext) / (ext.q_O - 1)
    lhs = -c * torus.volume
    rhs = -R / (ext.q_O - 1)
    checks = [
        {"name": "torus volume", "lhs": str(lhs), "rhs": str(rhs), "equal": lhs == rhs},
        {"name": "value at 0", "lhs": str(germ.value_at_0), "rhs": str(QL.L(rhs, ext.m - 1)),
         "equal": germ.value_at_0 == QL.L(rhs, ext.m - 1)},
    ]
    if ext.m == 1:
        setup = cycle_setup(ext, L, nus, r)
        eta = eta_log(setup.L, setup.cycle_norm([]))
        expected = QL.L(-c * eta)
        checks.append({"name": "derivative", "lhs": str(germ.derivative_at_0), "rhs": str(expected),
                       "equal": germ.derivative_at_0 == expected})
    return MultiReport(checks, germ, {"regulator": str(R)})


def finite_difference_derivative(ext: ExtensionData, L=None, nus=None, *, w=None, r: int = 1, h: float = 1e-2,
                                 tol: float = 1e-11) -> float:
    """Richardson-extrapolated central difference at s = 0 of the normalized series, through the continuation.

    Without ``w`` this differentiates E~(z, s); with ``w`` the Jacobi analogue.
    """
    if w is None:
        setup = cycle_setup(ext, L, nus, r)
        c = float(_scale_factor(ext)) / (ext.q_O - 1)
        expand = lambda nu: eisenstein_expansion(setup.L, nu)
    else:
        setup, _ = _jacobi_setup(ext, L, w, nus, r)
        c = float(_scale_factor(ext))
        expand = lambda nu: jacobi_expansion(setup.L, nu, setup.shift)
    m = ext.m
    c *= math.log(ext.q) ** (m - 1)
    germs = {}

    def germ_at(tp):
        if tp not in germs:
            germs[tp] = expand(setup.cycle_norm([tp] if m > 1 else []))
        return germs[tp]

    def value(s):
        if m == 1:
            return c * germ_at(None).evaluate(s)
        v, _ = torus_integral(setup, lambda tp: germ_at(tp).evaluate(s), tol)
        return c * v

    def central(step):
        return (value(step) - value(-step)) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def multi_jacobi_germ(ext: ExtensionData, L, w, nus=None, *, r: int = 1) -> MultiGerm:
    """Germ of d^{rs/2} (rs)^{1-m} E_O^L(z, w, s) at s = 0."""
    setup, C = _jacobi_setup(ext, L, w, nus, r)
    m = ext.m
    c = _scale_factor(ext)
    nr = ext.n * r
    q = ext.q
    if m == 1:
        germ = jacobi_expansion(setup.L, setup.cycle_norm([]), setup.shift)
        return MultiGerm(germ.expansion * c, 0.0, "exact", {"annihilator_norm_log": ext.ideal_norm_log(C)})

    def u_log(tp):
        nu = setup.cycle_norm([tp])
        return (q**nr - 1) * klein_log(setup.L, nu, setup.shift) - delta_log(setup.L, nu)

    u_int = exact_linear_integral(setup, u_log)
    deriv = QL.L(c * Fraction(nr, q**nr - 1) * u_int, m)
    return MultiGerm(TaylorExpansion([QL(), deriv], 1), 0.0, "quadrature",
                     {"u_integral": str(u_int), "torus_volume": str(setup.torus.volume)})


def multi_jacobi_integral(ext: ExtensionData, L, w, nus=None, s: float = 2.0, *, r: int = 1,
                          tol: float = 1e-9) -> tuple[float, float]:
    """(rs)^{m-1} (n_1..n_m/n) int E^{Y_L}(g z(t), w, s) dt over the congruence torus."""
    setup, _ = _jacobi_setup(ext, L, w, nus, r)
    m = ext.m
    const = (r * s) ** (m - 1) * float(_scale_factor(ext))
    if m == 1:
        return const * jacobi_expansion(setup.L, setup.cycle_norm([]), setup.shift).evaluate(s), 0.0
    f = lambda tp: jacobi_expansion(setup.L, setup.cycle_norm([tp]), setup.shift).evaluate(s)
    val, err = torus_integral(setup, f, tol)
    jac = math.log(ext.q) ** (m - 1)
    return const * jac * val, const * jac * err


def multi_limit_second(ext: ExtensionData, L, w, nus=None, *, r: int = 1) -> MultiReport:
    germ = multi_jacobi_germ(ext, L, w, nus, r=r)
    checks = [{"name": "value at 0", "lhs": str(germ.value_at_0), "rhs": "0", "equal": germ.value_at_0.is_zero()}]
    if ext.m == 1:
        setup, _ = _jacobi_setup(ext, L, w, nus, r)
        nu = setup.cycle_norm([])
        nr, q = ext.n * r, ext.q
        u = (q**nr - 1) * klein_log(setup.L, nu, setup.shift) - delta_log(setup.L, nu)
        expected = QL.L(math.prod(p.n for p in ext.places) * Fraction(r, q**nr - 1) * u)
        checks.append({"name": "derivative", "lhs": str(germ.derivative_at_0), "rhs": str(expected),
                       "equal": germ.derivative_at_0 == expected, "u_log": str(u)})
    return MultiReport(checks, germ)


__all__ = [
    "MultiGerm", "MultiReport", "QuadratureStall", "CycleSetup", "cycle_setup", "multi_eisenstein_numeric",
    "multi_level_counts", "multi_jacobi_numeric", "integral_representation", "rhs_normalized", "multi_germ",
    "multi_limit_first", "finite_difference_derivative", "multi_jacobi_germ", "multi_jacobi_integral",
    "multi_limit_second", "torus_integral", "exact_linear_integral",
]
