import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kron.eisenstein_one import (
    SlowConvergence,
    WInY,
    eisenstein_expansion,
    eisenstein_numeric,
    eta_log,
    jacobi_expansion,
    jacobi_numeric,
    limit_check_first,
    limit_check_second,
)
from kron.exact_base import QL, RatFunc, base_field, gf
from kron.gi_norms import Norm
from kron.lattice_enum import ModuleY, rat_matmul

from .strategies import modules, norms, polys


def standard(q, r):
    return ModuleY.standard(q, r), Norm.standard(base_field(q), r)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_rank_one_closed_form(q):
    # sum over nonzero a in A of |a|^{-s} = (q-1)/(1 - q^{1-s})
    Y, nu = standard(q, 1)
    germ = eisenstein_expansion(Y, nu)
    assert germ.value_at_0 == QL.const(-1)
    assert germ.derivative_at_0 == QL.L(Fraction(-q, q - 1))
    closed = lambda s: (q - 1) / (1 - q ** (1 - s))
    for s in (1.5, 2.0, 3.0):
        assert math.isclose(eisenstein_numeric(Y, nu, s, 1e-13), closed(s), rel_tol=1e-11)
        assert math.isclose(germ.evaluate(s), closed(s), rel_tol=1e-12)
    assert math.isclose(germ.evaluate(-0.5), closed(-0.5), rel_tol=1e-12)


@pytest.mark.parametrize("q", [2, 3])
def test_rank_two_closed_form(q):
    # vectors of max degree d number q^{2d}(q^2-1): (q^2-1)/(1 - q^{2-2s})
    Y, nu = standard(q, 2)
    germ = eisenstein_expansion(Y, nu)
    assert germ.derivative_at_0 == QL.L(Fraction(-2 * q * q, q * q - 1))
    assert math.isclose(germ.evaluate(2.0), (q * q - 1) / (1 - q ** -2.0), rel_tol=1e-12)


def test_jacobi_rank_one_closed_form():
    # |lambda - 1/T| = q^{deg lambda} for lambda != 0 and q^{-1} for lambda = 0
    q = 2
    Y, nu = standard(q, 1)
    w = [RatFunc.one(gf(q)) / RatFunc.T(gf(q))]
    closed = lambda s: q**s + (q - 1) / (1 - q ** (1 - s))
    germ = jacobi_expansion(Y, nu, w)
    assert germ.value_at_0.is_zero()
    assert germ.derivative_at_0 == QL.L(-1)
    assert math.isclose(jacobi_numeric(Y, nu, w, 2.0, 1e-13), closed(2.0), rel_tol=1e-11)


def test_limit_check_first_example():
    Y, nu = standard(2, 1)
    rep = limit_check_first(Y, nu)
    assert rep.equal and str(rep.lhs) == "-2·L"


@given(st.data())
def test_constant_term_and_first_formula(data):
    q = data.draw(st.sampled_from((2, 3, 4)))
    r = data.draw(st.integers(1, 2))
    Y = data.draw(modules(q, r))
    nu = data.draw(norms(q=q, r=r))
    a = data.draw(st.sampled_from(("T", "T + 1")))
    assert eisenstein_expansion(Y, nu, a).value_at_0 == QL.const(-1)
    assert limit_check_first(Y, nu, a).equal


@given(st.data())
def test_eta_independent_of_a(data):
    q = data.draw(st.sampled_from((2, 3)))
    r = data.draw(st.integers(1, 2))
    Y = data.draw(modules(q, r))
    nu = data.draw(norms(q=q, r=r))
    assert eta_log(Y, nu, "T") == eta_log(Y, nu, "T + 1") == eta_log(Y, nu, "T^2")


@given(st.data())
def test_germ_depends_only_on_module(data):
    q = 3
    Y = data.draw(modules(q, 2))
    nu = data.draw(norms(q=q, r=2))
    F = gf(q)
    c = data.draw(polys(q=q, max_deg=2))
    g = [[RatFunc.one(F), RatFunc(c)], [RatFunc.zero(F), RatFunc.one(F)]]
    Z = ModuleY(q, rat_matmul(g, Y.basis))
    assert eisenstein_expansion(Y, nu).expansion == eisenstein_expansion(Z, nu).expansion
    # and is unchanged by scaling Y by T
    T = RatFunc.T(F)
    assert eisenstein_expansion(Y.scaled(T), nu).expansion == eisenstein_expansion(Y, nu).expansion


@given(st.data())
def test_second_formula(data):
    from kron.acceptance import shift_in_dual
    import random

    q = data.draw(st.sampled_from((2, 3)))
    r = data.draw(st.integers(1, 2))
    Y = data.draw(modules(q, r))
    nu = data.draw(norms(q=q, r=r))
    w = shift_in_dual(random.Random(data.draw(st.integers(0, 10**6))), Y)
    rep = limit_check_second(Y, nu, w)
    assert rep.equal
    assert rep.details["value_at_0"].is_zero()


@given(st.data())
def test_direct_sum_matches_continuation(data):
    q = data.draw(st.sampled_from((2, 3)))
    r = data.draw(st.integers(1, 2))
    Y = data.draw(modules(q, r))
    nu = data.draw(norms(q=q, r=r))
    germ = eisenstein_expansion(Y, nu)
    assert math.isclose(eisenstein_numeric(Y, nu, 2.5, 1e-13), germ.evaluate(2.5), rel_tol=1e-9)


def test_shift_inside_module_rejected():
    Y, nu = standard(2, 1)
    with pytest.raises(WInY):
        jacobi_expansion(Y, nu, ["T"])


def test_numeric_needs_convergence():
    Y, nu = standard(2, 1)
    with pytest.raises(SlowConvergence):
        eisenstein_numeric(Y, nu, 1.0)
