"""The ten acceptance criteria as callable checks.

Both ``kron selftest`` and the pytest acceptance suite call into this module.
Random batteries are drawn from ``random.Random(seed)`` so a given seed always
produces the same inputs and the same report.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .eisenstein_multi import (
    finite_difference_derivative,
    integral_representation,
    multi_eisenstein_numeric,
    multi_germ,
    multi_limit_first,
    rhs_normalized,
)
from .eisenstein_one import eisenstein_expansion, limit_check_first, limit_check_second
from .exact_base import QL, Poly, PrecisionExhausted, RatFunc, TaylorExpansion, base_field, gf, local_field, precision
from .gi_norms import (
    Norm,
    integral_formula_check,
    lattice_discriminant,
    local_discriminant_log,
    log_abs_det,
    mat_det,
    norm_act,
    restrict_scalars,
    to_local_matrix,
)
from .global_ext import load_fixture
from .lattice_enum import ModuleY, rat_det
from .lfunc import (
    dirichlet_ray,
    dirichlet_ray_numeric,
    euler_removed_zeta,
    oracle_zeta_check,
    ray_data,
    zeta_order,
)

GOOD_FIXTURES = ("constant_f4", "kummer_sqrt_t", "real_quadratic", "rational_q3", "two_class_order")


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed, "details": self.details}


# ---------------------------------------------------------------------------
# random inputs


def random_poly(rng: random.Random, F, max_deg: int) -> Poly:
    return Poly(F, tuple(rng.randrange(F.order) for _ in range(max_deg + 1)))


def random_matrix(rng: random.Random, q: int, r: int, max_deg: int) -> list[list[RatFunc]]:
    F = gf(q)
    while True:
        M = [[RatFunc(random_poly(rng, F, max_deg)) for _ in range(r)] for _ in range(r)]
        if not rat_det(M).is_zero():
            return M


def random_norm(rng: random.Random, q: int, r: int, max_deg: int = 1, denominator: int = 3) -> Norm:
    K = base_field(q)
    basis = random_matrix(rng, q, r, max_deg)
    weights = [Fraction(rng.randint(-denominator, denominator), denominator) for _ in range(r)]
    return Norm.from_basis(K, basis, weights)


def random_module(rng: random.Random, q: int, r: int, max_deg: int = 2) -> ModuleY:
    return ModuleY(q, random_matrix(rng, q, r, max_deg))


def battery(seed: int, size: int):
    """(q, r, Y, nu, a) inputs for the one-variable criteria."""
    rng = random.Random(seed)
    out = []
    for _ in range(size):
        q = rng.choice((2, 3, 4))
        r = rng.choice((1, 2, 3))
        Y = random_module(rng, q, r)
        nu = random_norm(rng, q, r)
        a = rng.choice(("T", "T + 1"))
        out.append((q, r, Y, nu, a))
    return out


def shift_in_dual(rng: random.Random, Y: ModuleY) -> list[RatFunc]:
    """w = y / T for y in Y but not in T Y."""
    F = Y.F
    while True:
        c = [rng.randrange(F.order) for _ in range(Y.rank)]
        if any(c):
            break
    T = RatFunc(Poly(F, (0, 1)))
    w = [RatFunc.zero(F)] * Y.rank
    for ci, row in zip(c, Y.basis):
        w = [x + RatFunc.const(F, ci) * y for x, y in zip(w, row)]
    return [x / T for x in w]


def _random_local(rng: random.Random, K, low: int = -1, high: int = 1):
    terms = []
    for k in range(low, high + 1):
        coeff = rng.randrange(K.coeff.order)
        if coeff:
            terms.append(f"({_coeff_text(K, coeff)})*u^({k})")
    return " + ".join(terms) or "0"


def _coeff_text(K, idx: int) -> str:
    """Text of the residue-field element with the given index, as a polynomial in z."""
    F = K.coeff
    if F.degree == 1:
        return str(idx)
    digits = []
    x = idx
    for _ in range(F.degree):
        digits.append(x % F.p)
        x //= F.p
    return " + ".join(f"{d}*z^{i}" for i, d in enumerate(digits) if d) or "0"


def random_local_norm(rng: random.Random, q: int, e: int, f: int, r: int) -> Norm:
    K = local_field(q, e, f)
    while True:
        basis = [[_random_local(rng, K) for _ in range(r)] for _ in range(r)]
        U = to_local_matrix(basis, K)
        try:
            if not mat_det(U).is_certified_zero():
                break
        except PrecisionExhausted:
            continue
    weights = [Fraction(rng.randint(-2 * e, 2 * e), e) for _ in range(r)]
    return Norm.from_basis(K, U, weights)


# ---------------------------------------------------------------------------
# criteria


def criterion_1_2(seed: int = 1, size: int = 200) -> tuple[CriterionResult, CriterionResult]:
    inputs = battery(seed, size)
    const_fail, klf_fail = [], []
    for idx, (q, r, Y, nu, a) in enumerate(inputs):
        germ = eisenstein_expansion(Y, nu, a)
        if germ.value_at_0 != QL.const(-1):
            const_fail.append(idx)
        if not limit_check_first(Y, nu, a).equal:
            klf_fail.append(idx)
    spread = {"inputs": size, "q": sorted({x[0] for x in inputs}), "r": sorted({x[1] for x in inputs})}
    return (
        CriterionResult(1, "constant term E^Y(z,0) = -1", not const_fail, dict(spread, failures=const_fail)),
        CriterionResult(2, "first limit formula, exact in Q[L]", not klf_fail, dict(spread, failures=klf_fail)),
    )


def criterion_3(seed: int = 3, size: int = 100) -> CriterionResult:
    rng = random.Random(seed)
    failures = []
    for idx in range(size):
        q = rng.choice((2, 3, 4))
        r = rng.choice((1, 2, 3))
        Y = random_module(rng, q, r)
        nu = random_norm(rng, q, r)
        w = shift_in_dual(rng, Y)
        rep = limit_check_second(Y, nu, w)
        if not (rep.equal and rep.details["value_at_0"].is_zero()):
            failures.append(idx)
    return CriterionResult(3, "second limit formula, exact in Q[L]", not failures,
                           {"triples": size, "failures": failures})


def criterion_4(seed: int = 4, size: int = 100) -> CriterionResult:
    rng = random.Random(seed)
    act_fail, res_fail = [], []
    identity_rows = lambda r: [["1" if i == j else "0" for j in range(r)] for i in range(r)]
    for idx in range(size):
        q = rng.choice((2, 3))
        r = rng.choice((1, 2, 3))
        nu = random_norm(rng, q, r)
        g = random_matrix(rng, q, r, 3)
        acted = norm_act(g, nu)
        lhs = lattice_discriminant(acted, identity_rows(r)).value
        rhs = log_abs_det(to_local_matrix(g, nu.K)) + lattice_discriminant(nu, identity_rows(r)).value
        if lhs != rhs:
            act_fail.append(idx)
    fields = [(1, 1), (1, 2), (2, 1), (2, 2)]
    for idx in range(size):
        e, f = fields[idx % 4]
        q = rng.choice((2, 3))
        r = rng.choice((1, 2))
        nu_E = random_local_norm(rng, q, e, f, r)
        res = restrict_scalars(nu_E)
        lhs = lattice_discriminant(res, identity_rows(res.rank)).value
        rhs = Fraction(r, 2) * local_discriminant_log(nu_E.field) + lattice_discriminant(nu_E, identity_rows(r)).value
        if lhs != rhs:
            res_fail.append(idx)
    ok = not act_fail and not res_fail
    return CriterionResult(4, "discriminant transformation and restriction of scalars", ok,
                           {"cases": 2 * size, "action_failures": act_fail, "restriction_failures": res_fail})


def criterion_5(seed: int = 5, size: int = 30) -> CriterionResult:
    rng = random.Random(seed)
    worst = 0.0
    cases = 0
    for _ in range(size):
        m = rng.choice((2, 3))
        q = rng.choice((2, 3))
        norms, xs = [], []
        for _ in range(m):
            r = rng.choice((1, 2))
            norms.append(random_norm(rng, q, r))
            F = gf(q)
            while True:
                x = [RatFunc(random_poly(rng, F, 2)) for _ in range(r)]
                if any(not c.is_zero() for c in x):
                    break
            xs.append(x)
        for s in (Fraction(1, 2), Fraction(3, 2), Fraction(2)):
            lhs, rhs, residual = integral_formula_check(norms, xs, s)
            worst = max(worst, residual / max(1.0, abs(rhs)))
            cases += 1
    return CriterionResult(5, "product-norm integral formula", worst < 1e-9,
                           {"evaluations": cases, "worst_relative_residual": worst})


def _closed_constant_germ() -> TaylorExpansion:
    """Germ at 0 of 1/(1 - 4^{1-s}) (q = 2, O = F_4[T])."""
    # x = 2 L s: 1/(1 - 4 e^{-x}) = -1/3 - 4x/9 - 10 x^2/27 + ...
    return TaylorExpansion([QL.const(Fraction(-1, 3)), QL.L(Fraction(-8, 9)), QL.L(Fraction(-40, 27), 2)])


def criterion_6() -> CriterionResult:
    ext = load_fixture("constant_f4")
    germ = multi_germ(ext)
    closed = _closed_constant_germ()
    lhs2, _ = integral_representation(ext, None, None, 2.0)
    direct2 = rhs_normalized(ext, multi_eisenstein_numeric(ext, None, None, 2.0, 1e-12), 2.0)
    m1 = {"germ": [str(c) for c in germ.expansion.coeffs], "closed_form_germ": [str(c) for c in closed.coeffs],
          "germ_equal": germ.expansion == closed, "integral_s2": lhs2, "direct_s2": direct2,
          "within": abs(lhs2 - direct2) < 1e-9}
    rq = load_fixture("real_quadratic")
    m2 = []
    for s in (1.5, 2.0):
        lhs, err = integral_representation(rq, None, None, s)
        direct = rhs_normalized(rq, multi_eisenstein_numeric(rq, None, None, s, 1e-12), s)
        m2.append({"s": s, "integral": lhs, "direct": direct, "quadrature_error": err,
                   "within": abs(lhs - direct) < 1e-6})
    ok = m1["germ_equal"] and m1["within"] and all(x["within"] for x in m2)
    return CriterionResult(6, "integral representation over the regulator torus", ok,
                           {"constant_f4": m1, "real_quadratic": m2})


def criterion_7() -> CriterionResult:
    rows = []
    ok = True
    for name in GOOD_FIXTURES:
        ext = load_fixture(name)
        rep = multi_limit_first(ext)
        row = {"fixture": name, "checks": rep.checks}
        good = all(c["equal"] for c in rep.checks)
        if ext.m == 2:
            fd = finite_difference_derivative(ext)
            exact = rep.germ.derivative_at_0.evaluate(ext.q)
            row.update(finite_difference=fd, germ_derivative=exact)
            good = good and abs(fd - exact) < 1e-5 * math.log(ext.q)
        row["ok"] = good
        ok = ok and good
        rows.append(row)
    return CriterionResult(7, "several-variable first limit formula", ok, {"fixtures": rows})


def criterion_8() -> CriterionResult:
    out = {}
    ok = True
    expected = {
        "rational_q3": (QL.const(Fraction(-1, 2)), QL.L(Fraction(-3, 4)), 4),
        "constant_f4": (QL.const(Fraction(-1, 3)), QL.L(Fraction(-8, 9)), 6),
    }
    for name, (value, deriv, d_max) in expected.items():
        ext = load_fixture(name)
        rep = zeta_order(ext)
        got_value = rep.germ.rational_part(0)
        got_deriv = rep.germ.rational_part(1)
        oracle = oracle_zeta_check(ext, 2.0, d_max)
        good = got_value == value and got_deriv == deriv and rep.ok and oracle["within"]
        out[name] = {"value_at_0": str(got_value), "derivative_at_0": str(got_deriv),
                     "expected": [str(value), str(deriv)], "oracle": oracle, "ok": good}
        ok = ok and good
    return CriterionResult(8, "zeta closed forms and ideal-count oracle", ok, out)


def criterion_9() -> CriterionResult:
    ext = load_fixture("rational_q3")
    rows = []
    ok = True
    for idx in range(len(ext.ray)):
        ray = ray_data(ext, idx)
        for chi in ray.characters:
            rep = dirichlet_ray(ext, ray, chi)
            rows.append({"modulus": ext.ray[idx]["modulus"], "character": chi.values,
                         "value_at_0_zero": rep.checks[0]["equal"]})
            ok = ok and rep.checks[0]["equal"]
    ray = ray_data(ext, 0)
    num = dirichlet_ray_numeric(ext, ray, ray.characters[0], 2.0)
    closed = euler_removed_zeta(ext.q, 1, 2.0)
    euler_ok = abs(num - closed) < 1e-9
    return CriterionResult(9, "ray class L-functions", ok and euler_ok,
                           {"characters": rows, "euler": {"pipeline": num.real, "closed_form": closed,
                                                          "within": euler_ok}})


def exact_snapshot() -> dict:
    """Exact values whose stability under a precision change is checked."""
    snap = {}
    for name in GOOD_FIXTURES:
        ext = load_fixture(name)
        snap[name] = [str(c) for c in multi_germ(ext).expansion.coeffs]
    for idx, (q, r, Y, nu, a) in enumerate(battery(10, 12)):
        snap[f"battery_{idx}"] = [str(c) for c in eisenstein_expansion(Y, nu, a).expansion.coeffs]
    return snap


def precision_monotonicity(base: int = 64) -> CriterionResult:
    with precision(base):
        low = exact_snapshot()
    with precision(2 * base):
        high = exact_snapshot()
    changed = sorted(k for k in low if low[k] != high[k])
    return CriterionResult(10, "precision doubling leaves exact values unchanged", not changed,
                           {"precision": [base, 2 * base], "changed": changed})


def run_all(quick: bool = False, seed: int = 0) -> list[CriterionResult]:
    """Criteria 1-9 plus the precision half of criterion 10."""
    scale = 4 if quick else 1
    c1, c2 = criterion_1_2(seed + 1, 200 // scale)
    out = [c1, c2, criterion_3(seed + 3, 100 // scale), criterion_4(seed + 4, 100 // scale),
           criterion_5(seed + 5, 30 // scale if quick else 30)]
    out += [criterion_6(), criterion_7(), criterion_8(), criterion_9(), precision_monotonicity()]
    return out


def report_bytes(results: list[CriterionResult]) -> bytes:
    return json.dumps([r.to_json() for r in results], sort_keys=True, indent=2, default=str).encode()


__all__ = [
    "CriterionResult", "battery", "criterion_1_2", "criterion_3", "criterion_4", "criterion_5", "criterion_6",
    "criterion_7", "criterion_8", "criterion_9", "precision_monotonicity", "run_all", "report_bytes",
    "random_norm", "random_module", "random_local_norm", "shift_in_dual", "exact_snapshot", "GOOD_FIXTURES",
]
