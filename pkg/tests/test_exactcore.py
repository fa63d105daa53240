from fractions import Fraction

import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from btquant.exactcore import (
    DimensionError,
    GaussianRational,
    Interval,
    casimir_value,
    dim_sym,
    format_rational,
    multi_indices,
    multinomial,
    rational,
    sphere_monomial_integral,
)

small_q = st.fractions(min_value=-50, max_value=50, max_denominator=40).map(mpq)


def test_rational_parsing():
    assert rational("3/6") == mpq(1, 2)
    assert rational(" -7 ") == -7
    assert rational(Fraction(2, 3)) == mpq(2, 3)
    assert format_rational(mpq(-4, 6)) == "-2/3"
    with pytest.raises(TypeError):
        rational(0.5)
    with pytest.raises(ZeroDivisionError):
        rational("1/0")
    with pytest.raises(ValueError):
        rational("one/2")


def test_gaussian_arithmetic():
    a = GaussianRational(1, 2)
    b = GaussianRational(mpq(1, 2), -1)
    assert a * b == GaussianRational(mpq(5, 2), 0)
    assert (a / a) == GaussianRational(1)
    assert a.conjugate() == GaussianRational(1, -2)
    assert a.abs2() == 5
    assert GaussianRational.from_json(a.to_json()) == a


def test_multi_indices_order_and_count():
    idx = multi_indices(3, 2)
    assert idx[0] == (2, 0, 0)
    assert len(idx) == dim_sym(3, 2) == 6
    assert sum(multinomial(a) for a in idx) == 3 ** 2


def test_sphere_integral_d2_against_beta_function():
    # |x_1|^2 is uniform on [0, 1] for d = 2
    for a in range(5):
        for b in range(5):
            exact = sphere_monomial_integral((a, b), (a, b))
            assert float(exact) == pytest.approx(float(mpmath.beta(a + 1, b + 1)), rel=1e-14)


def test_sphere_integral_gaussian_moments():
    # E|z^g|^2 = g! for standard complex Gaussians and E|z|^{2k} = (d-1+k)!/(d-1)!
    for g in [(1, 0, 0), (2, 1, 0), (1, 1, 1), (3, 0, 2)]:
        k = sum(g)
        gauss = mpmath.fprod(mpmath.factorial(a) for a in g)
        radial = mpmath.factorial(len(g) - 1 + k) / mpmath.factorial(len(g) - 1)
        assert float(sphere_monomial_integral(g, g)) == pytest.approx(float(gauss / radial), rel=1e-14)


def test_sphere_integral_phase_kills_off_diagonal():
    assert sphere_monomial_integral((1, 0), (0, 1)) == 0
    with pytest.raises(DimensionError):
        sphere_monomial_integral((1, 0), (1, 0, 0))


def test_casimir_value_on_isotypes():
    for d in (2, 3, 4):
        for n in range(5):
            assert casimir_value(d, n, n) == 2 * n * (n + d - 1)


@given(small_q, small_q, small_q, small_q)
def test_interval_product_contains_pointwise_products(a, b, c, e):
    x = Interval(min(a, b), max(a, b))
    y = Interval(min(c, e), max(c, e))
    prod = x * y
    for u in (x.lo, x.hi, x.mid):
        for v in (y.lo, y.hi, y.mid):
            assert prod.contains(u * v)
    assert (x - y).contains(x.mid - y.mid)


@given(small_q, small_q, st.integers(min_value=8, max_value=64))
def test_interval_rounding_is_outward(a, b, bits):
    x = Interval(min(a, b), max(a, b) + mpq(1, 3))
    r = x.rounded(bits)
    assert r.lo <= x.lo and x.hi <= r.hi


def test_interval_division_by_zero_interval():
    with pytest.raises(ZeroDivisionError):
        Interval(1) / Interval(-1, 1)
    assert (Interval(-2, 1) ** 2) == Interval(0, 4)
