import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from kron.exact_base import LogValue, RatFunc, SingularMatrix, base_field, gf, parse_ratfunc
from kron.gi_norms import (
    DivergentIntegral,
    Norm,
    integral_formula_check,
    lattice_discriminant,
    log_abs_det,
    monomial_poly,
    norm_act,
    norm_eval,
    orthogonalize_lattice,
    product_integrand,
    product_norm,
    seminorm_eval,
    to_local_matrix,
    transform_point,
)

from .strategies import invertible_matrices, norms, ratfuncs, thirds, vectors


def identity_rows(r):
    return [["1" if i == j else "0" for j in range(r)] for i in range(r)]


@given(st.data())
def test_ultrametric(data):
    nu = data.draw(norms())
    x = data.draw(vectors(nu.K.q, nu.rank))
    y = data.draw(vectors(nu.K.q, nu.rank))
    s = [a + b for a, b in zip(x, y)]
    vs = norm_eval(nu, s)
    assert vs.is_bottom or not (max(norm_eval(nu, x), norm_eval(nu, y)) < vs)


@given(st.data())
def test_homogeneous(data):
    nu = data.draw(norms())
    q = nu.K.q
    x = data.draw(vectors(q, nu.rank))
    a = data.draw(ratfuncs(q, nonzero=True))
    assert norm_eval(nu, [a * c for c in x]) == norm_eval(nu, x) + a.degree()


@given(st.data())
def test_discriminant_transforms_by_det(data):
    nu = data.draw(norms())
    g = data.draw(invertible_matrices(nu.K.q, nu.rank, 2))
    lhs = lattice_discriminant(norm_act(g, nu)).value
    assert lhs == log_abs_det(to_local_matrix(g, nu.K)) + lattice_discriminant(nu).value


@given(st.data())
def test_closed_form_matches_orthogonalization(data):
    nu = data.draw(norms())
    rows = identity_rows(nu.rank)
    assert lattice_discriminant(nu) == lattice_discriminant(nu, rows)


@given(st.data())
def test_orthogonal_basis_realizes_norm(data):
    nu = data.draw(norms(r=2))
    rep = orthogonalize_lattice(nu, identity_rows(2))
    # the discriminant is the sum of the row values of an orthogonal basis
    assert sum(rep.epsilons) == lattice_discriminant(nu).value
    assert log_abs_det(rep.change_of_basis) == 0


@given(st.data(), thirds)
def test_shift_moves_discriminant(data, c):
    nu = data.draw(norms())
    assert lattice_discriminant(nu.shifted(c)).value == lattice_discriminant(nu).value + nu.rank * c


def test_antidiagonal_moves_point():
    nu = Norm.standard(base_field(2), 2)
    g = [["0", "1"], ["T", "0"]]
    assert lattice_discriminant(transform_point(g, nu)) == LogValue(-1)


def test_singular_action_rejected():
    nu = Norm.standard(base_field(3), 2)
    with pytest.raises(SingularMatrix):
        norm_act([["1", "T"], ["1", "T"]], nu)


@given(st.data())
def test_seminorm_is_multiplicative_on_monomials(data):
    nu = data.draw(norms(r=2))
    e1 = seminorm_eval(nu, monomial_poly({"1,0": "1"}))
    assert seminorm_eval(nu, monomial_poly({"2,0": "1"})) == e1 + e1
    assert seminorm_eval(nu, monomial_poly({"1,0": "T"})) == e1 + 1
    assert seminorm_eval(nu, {}).is_bottom


@pytest.mark.parametrize("s", [0.5, 1.5, 2.0])
def test_product_integral_against_scipy(s):
    K = base_field(2)
    nu1 = Norm.from_basis(K, [["1", "T"], ["0", "1"]], ["1/3", "-1/3"])
    nu2 = Norm.from_basis(K, [["T+1"]], ["2/3"])
    xs = [[parse_ratfunc("T^2", 2), parse_ratfunc("1", 2)], [parse_ratfunc("T+1", 2)]]
    lhs, rhs, _ = integral_formula_check([nu1, nu2], xs, s)
    g = product_integrand([nu1, nu2], xs, s)
    f = lambda t: g([t])
    # the integrand has one kink where the two blocks tie
    a = float(norm_eval(nu1, xs[0]).value - norm_eval(nu2, xs[1]).value) * math.log(2)
    left, _ = integrate.quad(f, -math.inf, a)
    right, _ = integrate.quad(f, a, math.inf)
    assert math.isclose(left + right, lhs, rel_tol=1e-8)
    assert math.isclose(lhs, rhs, rel_tol=1e-9)


def _split_quad(f, points):
    """Integral over R of f, broken at the given kinks."""
    cuts = sorted(set(points))
    edges = [-math.inf, *cuts, math.inf]
    return math.fsum(integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11)[0] for lo, hi in zip(edges, edges[1:]))


def test_three_factor_integral_against_scipy():
    K = base_field(3)
    ns = [Norm.from_basis(K, [["T"]], ["0"]), Norm.from_basis(K, [["1"]], ["1/3"]),
          Norm.from_basis(K, [["T+2"]], ["-2/3"])]
    xs = [[RatFunc.one(gf(3))]] * 3
    s = 1.5
    lhs, rhs, _ = integral_formula_check(ns, xs, s)
    g = product_integrand(ns, xs, s)
    v = [float(norm_eval(nu, x).value) * math.log(3) for nu, x in zip(ns, xs)]
    # the max switches where t_i + v_i = t_j + v_j
    inner = lambda t1: _split_quad(lambda t2: g([t1, t2]), [v[0] - v[2], t1 + v[1] - v[2]])
    val = _split_quad(inner, [v[0] - v[1]])
    assert math.isclose(val, rhs, rel_tol=1e-8)
    assert math.isclose(lhs, rhs, rel_tol=1e-9)


def test_integral_needs_positive_s():
    nu = Norm.standard(base_field(2), 1)
    with pytest.raises(DivergentIntegral):
        integral_formula_check([nu, nu], [["1"], ["1"]], 0)


def test_product_norm_weights():
    K = base_field(2)
    a, b = Norm.standard(K, 1), Norm.standard(K, 2)
    p = product_norm([a, b], [0, Fraction(1, 2)])
    assert p.rank == 3
    assert lattice_discriminant(p).value == Fraction(1)
