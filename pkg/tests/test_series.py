"""Tests for truncated series arithmetic and coordinate changes."""

import os

import numpy as np
import pytest

from magwkb.series import (
    Series1,
    Series2,
    complexify,
    realify,
    shift_variable,
    substitute_curve,
)

SEED = int(os.environ.get("MAGWKB_SEED", "0"))


def series2_close(a: Series2, b: Series2, tol=1e-12):
    n = min(a.order, b.order)
    return np.max(np.abs(a.coeffs[: n + 1, : n + 1] - b.coeffs[: n + 1, : n + 1])) <= tol


def random_series2(rng, order):
    c = rng.standard_normal((order + 1, order + 1)) + 1j * rng.standard_normal(
        (order + 1, order + 1)
    )
    return Series2(c)


def random_series1(rng, order, zero_constant=False):
    c = rng.standard_normal(order + 1) + 1j * rng.standard_normal(order + 1)
    if zero_constant:
        c[0] = 0.0
    return Series1(c)


# ---------------------------------------------------------------------------
# multiplication
# ---------------------------------------------------------------------------


def test_mul_difference_of_squares():
    a = Series2.from_terms({(0, 0): 1, (1, 0): 1}, 3)  # 1 + z
    b = Series2.from_terms({(0, 0): 1, (1, 0): -1}, 3)  # 1 - z
    expect = Series2.from_terms({(0, 0): 1, (2, 0): -1}, 3)
    assert series2_close(a * b, expect)


def test_mul_binomial():
    s = Series2.from_terms({(1, 0): 1, (0, 1): 1}, 4)  # z + w
    sq = s * s
    expect = Series2.from_terms({(2, 0): 1, (1, 1): 2, (0, 2): 1}, 4)
    assert series2_close(sq, expect)


def test_mul_truncation_drops_top_degree():
    a = Series1([1, 1])  # order 1
    prod = a * a
    assert prod.order == 1
    assert np.allclose(prod.coeffs, [1, 2])


def test_mul_uses_minimum_order():
    a = Series2.constant(1.0, 5)
    b = Series2.monomial(1, 1, 3)
    assert (a * b).order == 3


# ---------------------------------------------------------------------------
# complexify / realify
# ---------------------------------------------------------------------------


def test_complexify_radial_quadratic():
    s = Series2.from_terms({(2, 0): 1, (0, 2): 1}, 4)
    zs = complexify(s)
    assert series2_close(zs, Series2.monomial(1, 1, 4))


def test_complexify_linear():
    zs = complexify(Series2.monomial(1, 0, 2))
    expect = Series2.from_terms({(1, 0): 0.5, (0, 1): 0.5}, 2)
    assert series2_close(zs, expect)


def test_complexify_normal_form_quadratic():
    # b0 + a*q1^2 + g*q2^2 -> b0 + (a-g)/4 z^2 + (a+g)/2 zw + (a-g)/4 w^2
    b0, a, g = 2.0, 1.0, 4.0
    s = Series2.from_terms({(0, 0): b0, (2, 0): a, (0, 2): g}, 4)
    zs = complexify(s)
    assert abs(zs.coeff(0, 0) - b0) < 1e-14
    assert abs(zs.coeff(2, 0) - (a - g) / 4) < 1e-14
    assert abs(zs.coeff(1, 1) - (a + g) / 2) < 1e-14
    assert abs(zs.coeff(0, 2) - (a - g) / 4) < 1e-14


def test_complexify_realify_roundtrip():
    rng = np.random.default_rng(SEED)
    for _ in range(25):
        s = random_series2(rng, 6)
        assert series2_close(realify(complexify(s)), s, 1e-12)
        assert series2_close(complexify(realify(s)), s, 1e-12)


def test_reality_preservation():
    rng = np.random.default_rng(SEED + 1)
    for _ in range(25):
        c = rng.standard_normal((6, 6))
        s = Series2(c)  # real Taylor data
        assert complexify(s).is_conjugate_symmetric()


# ---------------------------------------------------------------------------
# substitute_curve / shift_variable
# ---------------------------------------------------------------------------


def test_substitute_direct():
    zw = Series2.monomial(1, 1, 4)
    out = substitute_curve(zw, Series1([0, 1], order=4))
    assert np.allclose(out.coeffs, Series1.monomial(2, 4).coeffs)


def test_substitute_zero_curve():
    s = Series2.from_terms({(0, 0): 3.0, (1, 1): 2.0}, 4)
    out = substitute_curve(s, Series1.zero(4))
    assert np.allclose(out.coeffs, Series1([3, 0, 0, 0, 0]).coeffs)


def test_substitute_rejects_nonzero_constant():
    with pytest.raises(ValueError):
        substitute_curve(Series2.monomial(1, 1, 3), Series1([1.0, 1.0]))


def test_substitute_anisotropic_curve_flattens_field():
    # For B = b0 + a q1^2 + g q2^2, the curve with slope
    # (sqrt(g)-sqrt(a))/(sqrt(g)+sqrt(a)) keeps B(z, w(z)) constant through
    # degree 2.
    b0, a, g = 1.0, 1.0, 4.0
    bz = complexify(Series2.from_terms({(0, 0): b0, (2, 0): a, (0, 2): g}, 4))
    w1 = (np.sqrt(g) - np.sqrt(a)) / (np.sqrt(g) + np.sqrt(a))
    out = substitute_curve(bz, Series1([0.0, w1], order=4))
    assert abs(out.coeff(0) - b0) < 1e-14
    assert abs(out.coeff(1)) < 1e-14
    assert abs(out.coeff(2)) < 1e-14


def test_shift_linear():
    out = shift_variable(Series2.monomial(0, 1, 3), Series1([0, 1], order=3))
    assert abs(out.coeff(0, 1) - 1) < 1e-14  # y
    assert abs(out.coeff(1, 0) - 1) < 1e-14  # z
    assert abs(out.coeff(1, 1)) < 1e-14


def test_shift_zero_curve_is_identity():
    rng = np.random.default_rng(SEED + 2)
    s = random_series2(rng, 5)
    out = shift_variable(s, Series1.zero(5))
    assert series2_close(out, s, 0.0)


def test_shift_matches_substitute_at_zero():
    rng = np.random.default_rng(SEED + 3)
    for _ in range(20):
        s = random_series2(rng, 7)
        w = random_series1(rng, 7, zero_constant=True)
        shifted = shift_variable(s, w)
        direct = substitute_curve(s, w)
        n = min(shifted.order, direct.order)
        assert np.max(np.abs(shifted.coeffs[: n + 1, 0] - direct.coeffs[: n + 1])) < 1e-11


def test_shift_commutes_with_w_derivative():
    rng = np.random.default_rng(SEED + 4)
    s = random_series2(rng, 7)
    w = random_series1(rng, 7, zero_constant=True)
    lhs = shift_variable(s, w).partial("y")
    rhs = shift_variable(s.partial("w"), w)
    assert series2_close(lhs, rhs, 1e-10)


def test_transport_velocity_slope_for_cubic_field():
    # For the shifted field data, twice the flattened field is constant in z:
    # the y-linear coefficient of the shifted series at a concrete cubic
    # field, checked against independent pointwise evaluation.
    b0, a, g, d = 1.0, 1.0, 4.0, 0.3
    order = 8
    bq = Series2.from_terms({(0, 0): b0, (2, 0): a, (0, 2): g, (3, 0): d}, order)
    bz = complexify(bq)
    # curve flattening the field, built coefficient by coefficient
    w1 = (np.sqrt(g) - np.sqrt(a)) / (np.sqrt(g) + np.sqrt(a))
    w = np.zeros(order, dtype=complex)
    w[1] = w1
    for p in range(2, order):
        resid = substitute_curve(bz, Series1(w))
        w[p] = -resid.coeff(p + 1) / np.sqrt(a * g)
    curve = Series1(w)
    shifted = shift_variable(bz, curve)
    v1 = shifted.slice_axis1(1)  # y-linear coefficient, a series in z
    # independent check by pointwise evaluation of d/dw B at (z, w(z))
    dbw = bz.partial("w")
    for z in [0.1, 0.05 + 0.02j, -0.08j]:
        wz = curve(z)
        assert abs(v1(z) - dbw(z, wz)) < 1e-8


# ---------------------------------------------------------------------------
# partial derivatives
# ---------------------------------------------------------------------------


def test_partial_basic():
    zw = Series2.monomial(1, 1, 3)
    assert series2_close(zw.partial("w"), Series2.monomial(1, 0, 2))
    assert Series2.constant(5.0, 3).partial("z").is_zero()


def test_partial_mixed_equals_laplace_factor():
    c = 2.5
    s = Series2.monomial(1, 1, 4) * c
    out = s.partial("z").partial("w") * 4.0
    assert abs(out.coeff(0, 0) - 4 * c) < 1e-14


def test_partials_commute():
    rng = np.random.default_rng(SEED + 5)
    s = random_series2(rng, 6)
    assert series2_close(s.partial("z").partial("w"), s.partial("w").partial("z"))


def test_chain_rule_through_curve():
    rng = np.random.default_rng(SEED + 6)
    for _ in range(10):
        s = random_series2(rng, 7)
        w = random_series1(rng, 7, zero_constant=True)
        lhs = substitute_curve(s, w).derivative()
        rhs = substitute_curve(s.partial("z"), w) + substitute_curve(
            s.partial("w"), w
        ) * w.derivative()
        n = min(lhs.order, rhs.order)
        assert np.max(np.abs(lhs.coeffs[: n + 1] - rhs.coeffs[: n + 1])) < 1e-10


# ---------------------------------------------------------------------------
# ring laws (1000 random cases)
# ---------------------------------------------------------------------------


def test_ring_laws_random():
    rng = np.random.default_rng(SEED + 7)
    for _ in range(1000):
        order = int(rng.integers(0, 9))
        a = random_series2(rng, order)
        b = random_series2(rng, int(rng.integers(0, 9)))
        c = random_series2(rng, int(rng.integers(0, 9)))
        scale = max(x.max_abs() for x in (a, b, c)) ** 3 + 1.0
        assert series2_close(a * b, b * a, 1e-13 * scale)
        assert series2_close((a * b) * c, a * (b * c), 1e-13 * scale)
        assert series2_close(a * (b + c), a * b + a * c, 1e-13 * scale)


def test_series1_exp_reciprocal_consistency():
    rng = np.random.default_rng(SEED + 8)
    for _ in range(50):
        s = random_series1(rng, 8, zero_constant=True) * 0.5
        prod = s.exp() * (-s).exp()
        expect = Series1.one(8)
        assert np.max(np.abs(prod.coeffs - expect.coeffs)) < 1e-12
        u = s + 1.0
        assert np.max(np.abs((u * u.reciprocal()).coeffs - expect.coeffs)) < 1e-10


def test_series1_integral_derivative():
    rng = np.random.default_rng(SEED + 9)
    s = random_series1(rng, 6)
    back = s.integral().derivative()
    assert np.max(np.abs(back.coeffs - s.coeffs)) < 1e-14


def test_immutability():
    s = Series1([1.0, 2.0])
    with pytest.raises(ValueError):
        s.coeffs[0] = 5.0
    t = Series2.constant(1.0, 2)
    with pytest.raises(ValueError):
        t.coeffs[0, 0] = 5.0
