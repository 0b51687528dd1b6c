import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kron.exact_base import (
    QL,
    LaurentElem,
    LogValue,
    PrecisionExhausted,
    RatFunc,
    TaylorExpansion,
    base_field,
    gf,
    laurent_expand,
    local_field,
    parse_ratfunc,
    precision,
    prime_power,
    taylor_qpow,
)

from .strategies import ORDERS, polys, ratfuncs


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9])
def test_field_axioms(q):
    F = gf(q)
    for a in range(q):
        assert F.add[a][0] == a
        assert F.add[a][F.neg[a]] == 0
        if a:
            assert F.mul[a][F.inv[a]] == 1
    for a in range(q):
        for b in range(q):
            for c in range(q):
                assert F.mul[a][F.add[b][c]] == F.add[F.mul[a][b]][F.mul[a][c]]


def test_prime_power():
    assert prime_power(9) == (3, 2)
    with pytest.raises(ValueError):
        prime_power(6)


@given(st.data())
def test_poly_division(data):
    q = data.draw(st.sampled_from(ORDERS))
    a = data.draw(polys(q=q, max_deg=5))
    b = data.draw(polys(q=q, max_deg=3, nonzero=True))
    quo, rem = divmod(a, b)
    assert quo * b + rem == a
    assert rem.is_zero() or rem.deg < b.deg


@given(st.data())
def test_gcd_divides(data):
    q = data.draw(st.sampled_from(ORDERS))
    a = data.draw(polys(q=q, max_deg=4, nonzero=True))
    b = data.draw(polys(q=q, max_deg=4, nonzero=True))
    g = a.gcd(b)
    assert (a % g).is_zero() and (b % g).is_zero()
    assert g.lc() == 1


@given(st.data())
def test_ratfunc_field(data):
    q = data.draw(st.sampled_from(ORDERS))
    x = data.draw(ratfuncs(q))
    y = data.draw(ratfuncs(q, nonzero=True))
    assert (x / y) * y == x
    assert x - x == RatFunc.zero(gf(q))
    assert parse_ratfunc(x.to_str(), q) == x


@given(st.data())
def test_laurent_expansion_is_a_ring_map(data):
    q = data.draw(st.sampled_from(ORDERS))
    x = data.draw(ratfuncs(q, nonzero=True))
    y = data.draw(ratfuncs(q, nonzero=True))
    K = base_field(q)
    ex, ey, exy = laurent_expand(x, K), laurent_expand(y, K), laurent_expand(x * y, K)
    prod = ex * ey
    upto = min(prod.prec, exy.prec) if prod.prec is not None and exy.prec is not None else 20
    for k in range(exy.val, upto):
        assert prod.coeff(k) == exy.coeff(k)
    # absolute value at infinity is q^deg
    assert ex.log_abs() == LogValue(x.degree())


def test_laurent_in_ramified_field():
    K = local_field(3, 2, 1)
    T = LaurentElem.from_ratfunc(K, parse_ratfunc("T", 3))
    assert T.log_abs() == LogValue(1)
    u = LaurentElem.uniformizer(K)
    assert u.log_abs() == LogValue(Fraction(-1, 2))


def test_precision_context_restores():
    from kron.exact_base import current_precision

    before = current_precision()
    with precision(16):
        assert current_precision() == 16
    assert current_precision() == before


def test_zero_has_no_certified_leading_term():
    F = gf(2)
    with pytest.raises((PrecisionExhausted, ZeroDivisionError)):
        LaurentElem.zero(base_field(2)).inverse()
    assert laurent_expand(RatFunc.zero(F), base_field(2)).coeffs == ()


@given(st.fractions(), st.integers(0, 3))
def test_ql_evaluate(x, p):
    v = QL.L(x, p)
    assert math.isclose(v.evaluate(3), float(x) * math.log(3) ** p, rel_tol=1e-12, abs_tol=1e-300)


@given(st.integers(-4, 4), st.integers(-4, 4))
def test_taylor_qpow_is_exponential(a, b):
    assert taylor_qpow(a) * taylor_qpow(b) == taylor_qpow(a + b)


def test_taylor_division_roundtrip():
    t = TaylorExpansion([QL.const(2), QL.L(1), QL.L(3, 2)])
    u = TaylorExpansion([QL.const(1), QL.const(-1), QL()])
    assert (t / u) * u == t


def test_logvalue_bottom():
    b = LogValue(None)
    assert b.is_bottom and b < LogValue(-100)
    assert (b + LogValue(3)).is_bottom
