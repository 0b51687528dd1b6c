import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kron.exact_base import QL
from kron.global_ext import load_fixture
from kron.lfunc import (
    CharacterTable,
    CycloGerm,
    NotAHomomorphism,
    character_orthogonality,
    class_level_counts,
    cyclotomic_poly,
    dirichlet_ray,
    dirichlet_ray_numeric,
    dirichlet_ring,
    dirichlet_ring_numeric,
    euler_removed_zeta,
    ideal_count_oracle,
    oracle_zeta_check,
    pic_characters,
    prime_divisor_degrees,
    ray_data,
    ray_oracle,
    ray_products,
    reduce_cyclotomic,
    zeta_order,
    zeta_tail_bound,
)

from .closed_forms import zeta_constant_f4, zeta_kummer, zeta_polynomial_ring, zeta_real_quadratic


@pytest.mark.parametrize("N,expected", [(1, [-1, 1]), (2, [1, 1]), (3, [1, 1, 1]), (4, [1, 0, 1]),
                                        (6, [1, -1, 1]), (12, [1, 0, -1, 0, 1])])
def test_cyclotomic_polynomials(N, expected):
    assert cyclotomic_poly(N) == expected


@given(st.integers(1, 12), st.integers(0, 30))
def test_full_orbit_sums_vanish(N, shift):
    # sum of all N-th roots of unity is 0 for N > 1
    vec = {e + shift: 1 for e in range(N)}
    assert (reduce_cyclotomic(vec, N) == {}) == (N > 1)


@given(st.integers(2, 12), st.dictionaries(st.integers(0, 20), st.integers(-3, 3), max_size=5))
def test_reduction_preserves_value(N, vec):
    red = reduce_cyclotomic(vec, N)
    z = cmath.exp(2j * math.pi / N)
    before = sum(c * z**e for e, c in vec.items())
    after = sum(float(c) * z**e for e, c in red.items())
    assert abs(before - after) < 1e-9


def test_cyclogerm_lift_and_add():
    from kron.exact_base import TaylorExpansion

    a = CycloGerm(2, {1: TaylorExpansion([QL.const(1), QL()])})
    b = CycloGerm(3, {0: TaylorExpansion([QL.const(1), QL()])})
    c = a + b
    assert c.N == 6
    # zeta_2 + 1 = 0
    assert c.is_zero_at(0)


def test_character_must_respect_relations():
    ext = load_fixture("two_class_order")
    bad = CharacterTable("pic", 3, [0, 1])
    with pytest.raises(NotAHomomorphism):
        bad.check(ext.pic_products)
    assert len(pic_characters(ext)) == 2


@pytest.mark.parametrize("name,closed", [
    ("constant_f4", zeta_constant_f4()),
    ("kummer_sqrt_t", zeta_kummer(3)),
    ("rational_q3", zeta_polynomial_ring(3)),
    ("real_quadratic", zeta_real_quadratic(3)),
])
def test_zeta_germ_closed_forms(name, closed):
    rep = zeta_order(load_fixture(name))
    assert rep.ok
    for j in range(rep.germ.order + 1):
        assert rep.germ.rational_part(j) == closed.coeffs[j]


def test_two_class_zeta_value():
    rep = zeta_order(load_fixture("two_class_order"))
    # -#Pic * R / (q_O - 1) with R = 1, q_O = 2
    assert rep.germ.rational_part(0) == QL.const(-2)
    assert rep.ok


@pytest.mark.parametrize("name,d_max", [("rational_q3", 4), ("kummer_sqrt_t", 4)])
def test_zeta_against_ideal_count(name, d_max):
    assert oracle_zeta_check(load_fixture(name), 2.0, d_max)["within"]


def test_oracle_counts_polynomial_ring():
    # monic polynomials of degree d: q^d
    res = ideal_count_oracle(load_fixture("rational_q3"), 3)
    assert [c for _, c in res.counts] == [1, 3, 9, 27]


def test_two_class_counts_per_class():
    ext = load_fixture("two_class_order")
    oracle = ideal_count_oracle(ext, 4, by_class=True)
    pipeline = class_level_counts(ext, 4)
    for d, per_class in oracle.by_class:
        for cls, count in enumerate(per_class):
            assert pipeline[cls].get(d, 0) == count


def test_tail_bound_dominates_geometric_tail():
    # for n = 1 the tail is exactly sum_{d > D} q^{d(1-s)}
    q, s, D = 3, 2.0, 5
    exact = sum(q ** (d * (1 - s)) for d in range(D + 1, 400))
    assert math.isclose(zeta_tail_bound(q, 1, D, s), exact, rel_tol=1e-12)


def test_ring_characters():
    ext = load_fixture("two_class_order")
    chars = pic_characters(ext)
    nontrivial = next(c for c in chars if not c.is_trivial)
    rep = dirichlet_ring(ext, nontrivial)
    assert rep.ok and rep.germ.is_zero_at(0)
    assert character_orthogonality(ext)["equal"]
    # numeric L at s = 2 against per-class ideal counts; counts are nonnegative, so the
    # character-weighted tail is bounded by the tail of zeta_O itself
    val = dirichlet_ring_numeric(ext, nontrivial, 2.0)
    oracle = ideal_count_oracle(ext, 4, by_class=True)
    partial_l = sum((a - b) * 2.0 ** (-2 * float(d)) for d, (a, b) in oracle.by_class)
    partial_zeta = sum((a + b) * 2.0 ** (-2 * float(d)) for d, (a, b) in oracle.by_class)
    tail = zeta_order(ext, 2.0) - partial_zeta
    assert abs(val.imag) < 1e-12
    assert tail >= -1e-12
    assert abs(val.real - partial_l) <= tail + 1e-12


@pytest.mark.parametrize("modulus,primes", [("T", [1]), ("T^2", [1]), ("T^3 + T", [1, 2])])
def test_prime_divisor_degrees(modulus, primes):
    from kron.exact_base import parse_ratfunc

    assert sorted(prime_divisor_degrees(parse_ratfunc(modulus, 3).split()[0])) == primes


def test_ray_characters_vanish_at_zero():
    ext = load_fixture("rational_q3")
    for idx in range(len(ext.ray)):
        ray = ray_data(ext, idx)
        for chi in ray.characters:
            rep = dirichlet_ray(ext, ray, chi)
            assert rep.ok


def test_ray_mod_t_squared_closed_form():
    # (A/T^2)^* / F_3^* is cyclic of order 3 generated by 1 + T; for chi nontrivial
    # only degrees 0 and 1 survive: L(s, chi) = 1 + (chi(T+1) + chi(T+2)) 3^{-s} = 1 - 3^{-s}
    ext = load_fixture("rational_q3")
    ray = next(ray_data(ext, i) for i in range(len(ext.ray)) if ext.ray[i]["modulus"] == "T^2")
    assert {(i, j, k) for i, j, k in ray_products(ext, ray)} >= {(0, 0, 0)}
    for chi in ray.characters:
        if chi.is_trivial:
            continue
        rep = dirichlet_ray(ext, ray, chi)
        assert rep.germ.rational_part(1) == QL.L(1)
        val = dirichlet_ray_numeric(ext, ray, chi, 2.0)
        assert abs(val - 8 / 9) < 1e-10
        partial, tail = ray_oracle(ext, ray, chi, 2.0, 4)
        assert abs(partial - val) <= tail + 1e-12


def test_euler_factor_removal():
    ext = load_fixture("rational_q3")
    ray = ray_data(ext, 0)
    trivial = next(c for c in ray.characters if c.is_trivial)
    num = dirichlet_ray_numeric(ext, ray, trivial, 2.0)
    assert abs(num - euler_removed_zeta(3, 1, 2.0)) < 1e-9
    rep = dirichlet_ray(ext, ray, trivial)
    # (1 - 3^{-s}) / (1 - 3^{1-s}): derivative at 0 is L / (1 - 3)
    assert rep.germ.rational_part(1) == QL.L(Fraction(-1, 2))
