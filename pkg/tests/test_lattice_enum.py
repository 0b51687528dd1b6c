import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kron.exact_base import Poly, RatFunc, gf, parse_ratfunc
from kron.gi_norms import norm_eval
from kron.lattice_enum import (
    BallTooLarge,
    ConstantA,
    ModuleY,
    cosets_mod,
    enumerate_ball,
    hnf,
    module_index_log,
    rat_det,
    rat_inverse,
    rat_matmul,
    reduce_module,
    theta_count,
)

from .strategies import modules, norms, polys


def brute_count(Y, nu, bound, D):
    """Vectors sum a_i b_i over the given basis with deg a_i <= D and nu <= bound."""
    F = Y.F
    polys_D = [Poly(F, c) for c in itertools.product(range(Y.q), repeat=D + 1)]
    count = 0
    for coeffs in itertools.product(polys_D, repeat=Y.rank):
        v = [RatFunc.zero(F)] * Y.rank
        for a, row in zip(coeffs, Y.basis):
            v = [x + RatFunc(a) * y for x, y in zip(v, row)]
        val = norm_eval(nu, v)
        if val.is_bottom or not (Fraction(bound) < val.value):
            count += 1
    return count


@given(st.data())
def test_theta_count_matches_brute_force(data):
    Y = data.draw(modules(2, 2, max_deg=1))
    nu = data.draw(norms(q=2, r=2, max_deg=1))
    bound = data.draw(st.integers(-1, 1))
    # coefficient degrees are bounded by bound + a constant depending on Y and nu; 4 suffices here
    small, large = brute_count(Y, nu, bound, 3), brute_count(Y, nu, bound, 4)
    assert small == large == theta_count(Y, nu, bound)


@given(st.data())
def test_reduced_basis_is_orthogonal(data):
    Y = data.draw(modules(3, 2))
    nu = data.draw(norms(q=3, r=2))
    red = reduce_module(Y, nu)
    F = Y.F
    for a, b in itertools.product(range(3), repeat=2):
        if a == b == 0:
            continue
        pa, pb = RatFunc(Poly(F, (0, a))), RatFunc(Poly(F, (b,)))
        v = [pa * x + pb * y for x, y in zip(*red.basis)]
        expected = max(Fraction(pa.degree()) + red.levels[0] if a else None,
                       Fraction(pb.degree()) + red.levels[1] if b else None,
                       key=lambda t: Fraction(-10**9) if t is None else t)
        assert norm_eval(nu, v).value == expected
    # same module as Y
    assert ModuleY(3, red.basis).same_module(Y)


@given(st.data())
def test_hnf_is_a_module_invariant(data):
    q = 3
    Y = data.draw(modules(q, 2))
    F = gf(q)
    c = data.draw(polys(q=q, max_deg=2))
    g = [[RatFunc.one(F), RatFunc(c)], [RatFunc.zero(F), RatFunc.const(F, 2)]]
    Z = ModuleY(q, rat_matmul(g, Y.basis))
    assert Z.same_module(Y)
    assert module_index_log(Y, Z) == 0


def test_hnf_shape():
    F = gf(2)
    P = lambda *c: Poly(F, c)
    H = hnf([[P(0, 1), P(1)], [P(1, 1), P(0, 0, 1)]])
    assert H[1][0].is_zero()
    assert all(H[i][i].lc() == 1 for i in range(2))
    assert H[0][1].is_zero() or H[0][1].deg < H[1][1].deg


def test_inverse_roundtrip():
    M = [[parse_ratfunc("T", 3), parse_ratfunc("1", 3)], [parse_ratfunc("1/(T+1)", 3), parse_ratfunc("T^2", 3)]]
    ident = rat_matmul(M, rat_inverse(M))
    assert [[x.to_str() for x in row] for row in ident] == [["1", "0"], ["0", "1"]]
    assert not rat_det(M).is_zero()


def test_cosets_count_and_distinct():
    Y = ModuleY.standard(3, 2)
    reps = cosets_mod(Y, "T+1")
    assert len(reps) == 9
    assert all(x.is_zero() for x in reps[0])
    diffs = {tuple(x.to_str() for x in r) for r in reps}
    assert len(diffs) == 9
    with pytest.raises(ConstantA):
        cosets_mod(Y, "2")


def test_enumerate_ball_budget():
    from kron.exact_base import base_field
    from kron.gi_norms import Norm

    Y = ModuleY.standard(2, 2)
    nu = Norm.standard(base_field(2), 2)
    ball = enumerate_ball(Y, nu, 1)
    assert len(ball) == theta_count(Y, nu, 1) == 16
    with pytest.raises(BallTooLarge):
        enumerate_ball(Y, nu, 10, budget=100)
