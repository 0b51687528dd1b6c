import math

import pytest

from kron.eisenstein_multi import (
    finite_difference_derivative,
    integral_representation,
    multi_eisenstein_numeric,
    multi_germ,
    multi_jacobi_germ,
    multi_jacobi_integral,
    multi_jacobi_numeric,
    multi_level_counts,
    multi_limit_first,
    multi_limit_second,
    rhs_normalized,
)
from kron.exact_base import QL
from kron.global_ext import WInL, load_fixture
from kron.lfunc import ideal_count_oracle

from .closed_forms import zeta_constant_f4, zeta_kummer, zeta_polynomial_ring, zeta_real_quadratic

MAXIMAL = ["constant_f4", "kummer_sqrt_t", "real_quadratic", "rational_q3"]

# zeta_O(s) at s = 2 from the closed forms: 1/(1-q^{-1}) or (1-q^{-2})/(1-q^{-1}) or 1/(1-4^{-1})
ZETA_AT_2 = {"constant_f4": 4 / 3, "kummer_sqrt_t": 1.5, "rational_q3": 1.5, "real_quadratic": 4 / 3}


@pytest.mark.parametrize("name", MAXIMAL)
def test_direct_sum_matches_closed_zeta(name):
    ext = load_fixture(name)
    assert math.isclose(multi_eisenstein_numeric(ext, None, None, 2.0, 1e-13), ZETA_AT_2[name], rel_tol=1e-11)


@pytest.mark.parametrize("name", MAXIMAL)
@pytest.mark.parametrize("s", [1.5, 2.0])
def test_integral_representation(name, s):
    ext = load_fixture(name)
    lhs, err = integral_representation(ext, None, None, s)
    rhs = rhs_normalized(ext, multi_eisenstein_numeric(ext, None, None, s, 1e-13), s)
    assert abs(lhs - rhs) <= max(1e-9, 10 * err)


@pytest.mark.parametrize("name,closed", [
    ("constant_f4", zeta_constant_f4()),
    ("kummer_sqrt_t", zeta_kummer(3)),
    ("rational_q3", zeta_polynomial_ring(3)),
    ("real_quadratic", zeta_real_quadratic(3)),
])
def test_germ_matches_closed_form(name, closed):
    germ = multi_germ(load_fixture(name))
    assert germ.expansion == closed


@pytest.mark.parametrize("name", MAXIMAL + ["two_class_order"])
def test_first_limit_formula(name):
    rep = multi_limit_first(load_fixture(name))
    assert rep.ok, rep.checks


def test_finite_difference_real_quadratic():
    ext = load_fixture("real_quadratic")
    exact = multi_germ(ext).derivative_at_0.evaluate(ext.q)
    assert abs(finite_difference_derivative(ext) - exact) < 1e-5 * math.log(ext.q)


@pytest.mark.parametrize("name,w", [
    ("constant_f4", ["1/T"]),
    ("kummer_sqrt_t", ["x/T"]),
    ("real_quadratic", ["1/T"]),
    ("real_quadratic", ["x/(T+1)"]),
])
def test_jacobi_integral_matches_direct(name, w):
    ext = load_fixture(name)
    L = ext.order_module()
    lhs, err = multi_jacobi_integral(ext, L, w, None, 2.0)
    rhs = rhs_normalized(ext, multi_jacobi_numeric(ext, L, w, None, 2.0, 1e-13), 2.0)
    assert abs(lhs - rhs) <= max(1e-8, 10 * err)


@pytest.mark.parametrize("name,w", [("constant_f4", ["1/T"]), ("kummer_sqrt_t", ["x/T"]),
                                    ("rational_q3", ["1/(T+1)"])])
def test_second_limit_formula_single_place(name, w):
    ext = load_fixture(name)
    rep = multi_limit_second(ext, ext.order_module(), w)
    assert rep.ok, rep.checks


def test_jacobi_germ_vanishes_and_matches_finite_difference():
    ext = load_fixture("real_quadratic")
    w = ["x/(T+1)"]
    germ = multi_jacobi_germ(ext, ext.order_module(), w)
    assert germ.value_at_0 == QL()
    fd = finite_difference_derivative(ext, ext.order_module(), w=w)
    assert abs(fd - germ.derivative_at_0.evaluate(ext.q)) < 1e-5 * math.log(ext.q)


def test_shift_in_lattice_rejected():
    ext = load_fixture("real_quadratic")
    with pytest.raises(WInL):
        multi_jacobi_germ(ext, ext.order_module(), ["1 + T*x"])


def test_level_counts_match_ideal_oracle():
    # one orbit per principal ideal: counts of integral ideals of each norm
    ext = load_fixture("kummer_sqrt_t")
    counts = multi_level_counts(ext, None, 3)
    oracle = dict(ideal_count_oracle(ext, 3).counts)
    assert {int(d): c for d, c in counts.items() if c} == {int(d): c for d, c in oracle.items() if c}
