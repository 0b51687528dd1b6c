import copy
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kron.exact_base import parse_ratfunc
from kron.gi_norms import lattice_discriminant
from kron.global_ext import (
    ExtensionData,
    SchemaError,
    ValidationFailed,
    annihilator,
    canonical_norms,
    contains_element,
    ext_validate,
    fixture_names,
    heegner_discriminant_closed,
    heegner_norm,
    heegner_param,
    load_fixture,
    regulator_and_domain,
)

GOOD = ["constant_f4", "kummer_sqrt_t", "real_quadratic", "rational_q3", "two_class_order"]


def test_fixture_inventory():
    assert set(GOOD) | {"bad_genus"} == set(fixture_names())


@pytest.mark.parametrize("name", GOOD)
def test_fixtures_validate(name):
    assert ext_validate(load_fixture(name)).ok


def test_bad_genus_fails_check_iv():
    with pytest.raises(ValidationFailed) as info:
        ext_validate(load_fixture("bad_genus"))
    assert info.value.check == "iv"
    report = ext_validate(load_fixture("bad_genus"), strict=False)
    assert not report.ok and report.checks["i"]["pass"]


def test_unknown_schema():
    data = copy.deepcopy(load_fixture("constant_f4").source)
    data["schema"] = "extension-v7"
    with pytest.raises(SchemaError):
        ExtensionData.from_json(data)


def test_real_quadratic_unit_and_regulator():
    ext = load_fixture("real_quadratic")
    u = ext.element("T + x")
    # (T + y)(T - y) = T^2 - y^2 = 1
    assert ext.mul(u, ext.element("T - x")) == ext.one()
    assert [ext.log_abs(u, i) for i in range(2)] == [1, -1]
    R, torus = regulator_and_domain(ext)
    assert R == 1
    # t' coordinates stretch the unit lattice by n / (n_1 n_2)
    assert torus.volume == R * ext.n


@pytest.mark.parametrize("name", GOOD)
def test_ring_laws(name):
    ext = load_fixture(name)
    a, b, c = ext.element("x + T"), ext.element("T^2 + 1"), ext.element("x^2 + 1")
    assert ext.mul(a, ext.mul(b, c)) == ext.mul(ext.mul(a, b), c)
    assert ext.mul(a, b) == ext.mul(b, a)
    assert ext.mul(ext.add(a, b), c) == ext.add(ext.mul(a, c), ext.mul(b, c))
    assert ext.element(ext.fmt(a)) == a
    assert ext.mul(a, ext.inverse(a)) == ext.one()


@pytest.mark.parametrize("name", ["kummer_sqrt_t", "real_quadratic", "constant_f4"])
def test_norm_of_product_is_additive(name):
    ext = load_fixture(name)
    I = ext.principal(ext.element("x + T"))
    J = ext.principal(ext.element("T + 1"))
    assert ext.ideal_norm_log(ext.ideal_product(I, J)) == ext.ideal_norm_log(I) + ext.ideal_norm_log(J)
    assert ext.ideal_norm_log(J) == ext.n


def test_colon_inverts_invertible_ideals():
    ext = load_fixture("two_class_order")
    I = ext.module([ext.element(s) for s in ext.source["class_reps"][1]])
    assert ext.is_invertible(I)
    prod = ext.ideal_product(I, ext.colon(I))
    assert prod.same_module(ext.order_module())


@given(st.lists(st.integers(-6, 6).map(lambda k: Fraction(k, 2)), min_size=2, max_size=2))
def test_heegner_discriminant_closed_form(t):
    ext = load_fixture("real_quadratic")
    param = heegner_param(ext)
    nus = canonical_norms(ext)
    direct = lattice_discriminant(heegner_norm(param, nus, t)).value
    assert direct == heegner_discriminant_closed(param, nus, t)


@pytest.mark.parametrize("name", ["kummer_sqrt_t", "constant_f4"])
def test_heegner_discriminant_single_place(name):
    ext = load_fixture(name)
    param = heegner_param(ext)
    nus = canonical_norms(ext)
    assert lattice_discriminant(heegner_norm(param, nus, [0])).value == heegner_discriminant_closed(param, nus, [0])


def test_annihilator_kills_shift():
    ext = load_fixture("real_quadratic")
    L = ext.order_module()
    w = [parse_ratfunc("1/T", 3), parse_ratfunc("0", 3)]
    C = annihilator(ext, L, w)
    assert contains_element(ext, C, ext.element("T"))
    assert not contains_element(ext, C, ext.one())
    whole = annihilator(ext, L, [parse_ratfunc("1", 3), parse_ratfunc("0", 3)])
    assert contains_element(ext, whole, ext.one())
