"""Hypothesis strategies shared across the suites."""

from fractions import Fraction

from hypothesis import strategies as st

from kron.exact_base import Poly, RatFunc, gf
from kron.lattice_enum import ModuleY, rat_matmul

ORDERS = (2, 3, 4)


@st.composite
def polys(draw, q=None, max_deg=3, nonzero=False):
    q = q or draw(st.sampled_from(ORDERS))
    F = gf(q)
    coeffs = draw(st.lists(st.integers(0, q - 1), min_size=0, max_size=max_deg + 1))
    p = Poly(F, coeffs)
    if nonzero and p.is_zero():
        p = Poly.const(F, 1)
    return p


@st.composite
def ratfuncs(draw, q, max_deg=3, nonzero=False):
    num = draw(polys(q=q, max_deg=max_deg, nonzero=nonzero))
    den = draw(polys(q=q, max_deg=2, nonzero=True))
    return RatFunc(num, den)


@st.composite
def invertible_matrices(draw, q, r, max_deg=1):
    """Lower unitriangular times upper triangular with nonzero diagonal: invertible by construction."""
    F = gf(q)
    zero, one = RatFunc.zero(F), RatFunc.one(F)
    lower = [[RatFunc(draw(polys(q=q, max_deg=max_deg))) if j < i else (one if i == j else zero) for j in range(r)]
             for i in range(r)]
    upper = [[RatFunc(draw(polys(q=q, max_deg=max_deg, nonzero=(i == j)))) if j >= i else zero for j in range(r)]
             for i in range(r)]
    return rat_matmul(lower, upper)


@st.composite
def modules(draw, q, r, max_deg=2):
    return ModuleY(q, draw(invertible_matrices(q, r, max_deg)))


thirds = st.integers(-3, 3).map(lambda k: Fraction(k, 3))


@st.composite
def norms(draw, q=None, r=None, max_deg=1):
    from kron.exact_base import base_field
    from kron.gi_norms import Norm

    q = q or draw(st.sampled_from((2, 3)))
    r = r or draw(st.integers(1, 3))
    basis = draw(invertible_matrices(q, r, max_deg))
    weights = [draw(thirds) for _ in range(r)]
    return Norm.from_basis(base_field(q), basis, weights)


@st.composite
def vectors(draw, q, r, max_deg=3):
    F = gf(q)
    v = [draw(ratfuncs(q, max_deg=max_deg)) for _ in range(r)]
    if all(x.is_zero() for x in v):
        v[0] = RatFunc.one(F)
    return v
