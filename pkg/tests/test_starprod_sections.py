import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from btquant import polys, quantize, sections, starprod, symbols
from btquant.starprod import PoleError


def test_star_coefficient_values():
    assert starprod.star_coefficient(2, 1, 0) == 1
    assert starprod.star_coefficient(2, 1, 1) == mpq(-1, 3)
    # (m+d-1)!/(n!(n+m+d-1)!) at d=3, m=2, n=2: 4!/(2! 6!)
    assert starprod.star_coefficient(3, 2, 2) == mpq(24, 2 * 720)
    with pytest.raises(PoleError):
        starprod.star_coefficient(2, -2, 1)


def test_star_zero_is_pointwise_product():
    rng = np.random.default_rng(2)
    f, g = symbols.random_symbol(3, 1, rng), symbols.random_symbol(3, 2, rng)
    assert starprod.star_n(f, g, 0) == symbols.multiply(f, g)
    assert starprod.star_n(f, g, 2).is_zero()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.integers(0, 3))
def test_toeplitz_product_expansion_terminates(seed, d, m):
    rng = np.random.default_rng(seed)
    f, g = symbols.random_symbol(d, 2, rng), symbols.random_symbol(d, 1, rng)
    assert starprod.remainder(f, g, m, 2).is_zero()
    assert quantize.op_m(starprod.star_full(f, g, m), m) == quantize.op_m(f, m) @ quantize.op_m(g, m)


def test_engine_star_matches_direct_formula():
    rng = np.random.default_rng(0)
    for d in (2, 3):
        f, g = symbols.random_symbol(d, 2, rng), symbols.random_symbol(d, 2, rng)
        for n in (1, 2):
            assert sections.xi_star_n(f, g, n) == starprod.star_n(f, g, n)


def test_associativity_at_fixed_and_pinned_parameters():
    rng = np.random.default_rng(42)
    f, g, h = (symbols.random_symbol(2, 1, rng) for _ in range(3))
    r = starprod.check_associativity(f, g, h, [0, 3], pin=True)
    assert r["pass"] and r["pinned"]
    assert starprod.associator(f, g, h, mpq(5, 2)).is_zero()


def test_remainder_sign_and_domination():
    f = symbols.random_symbol(2, 2, np.random.default_rng(7))
    for N in (1, 2, 3):
        r = starprod.check_thm2_hermitian(f, 3, N, slack=True)
        assert r["lower"] and r["upper"]
        assert r["lower_slack_min_eig"] > -1e-9


def test_schatten_bound_exact_and_floating():
    rng = np.random.default_rng(9)
    f, g = symbols.random_symbol(2, 2, rng), symbols.random_symbol(2, 2, rng)
    exact = starprod.check_thm2_general(f, g, 4, 1, 2, 4, 4)
    assert exact["exact"] and exact["holds"]
    assert exact["lhs"] <= exact["rhs"] * (1 + 1e-12)
    sup = starprod.check_thm2_general(f, g, 4, 2, "inf", "inf", "inf")
    assert not sup["exact"] and sup["holds"]
    with pytest.raises(ValueError):
        starprod.check_thm2_general(f, g, 4, 1, 2, 2, 2)


def test_sup_norm_estimate_is_a_lower_bound_near_the_max():
    f = symbols.coordinate_symbol(2, 0, 0)
    assert 0.99 < starprod.sup_norm_estimate(f) <= 1.0 + 1e-12


def test_d_m_eigenvalues_on_basis_sections():
    for d in (2, 3):
        for m in (0, 1, 2):
            for a in (0, 1, 2):
                for s in sections.basis_sections(d, m, a):
                    assert sections.d_m_apply(s) == s.scale(sections.mu(d, m, a))


def test_d_products_small_grid():
    r = sections.check_d_products(2, 1, 2, a_max=1)
    assert r["pass"] and r["cases"] > 0
    with pytest.raises(ValueError):
        sections.check_d_products(2, 1, 4)


def test_interpolating_polynomial_nodes():
    q = sections.q_poly(3, 1, 3)
    assert sections.peval(q, 0) == 1
    for i in (1, 2, 3):
        assert sections.peval(q, sections.mu(3, 1, i)) == 0
    assert sections.q_poly(2, 0, 4) == sections.sum_of_products_poly(2, 0, 4)


@pytest.mark.parametrize("d,m,n", [(2, 0, 0), (2, 3, 4), (3, 2, 6)])
def test_interpolating_lemma_checks(d, m, n):
    r = sections.check_interpolating_lemma(d, m, n, per_gap=5)
    assert r["pass"] and r["tight"]


def test_associator_terms_cancel_only_with_star_coefficients():
    rng = np.random.default_rng(5)
    f, g, h = (symbols.random_symbol(3, 2, rng) for _ in range(3))
    terms = starprod.associator_terms(f, g, h)
    assert terms
    # the individual terms are nonzero; only the weighted sum vanishes
    unit = {}
    for p in terms.values():
        polys.add_into(unit, p)
    assert unit
    for m in (0, 3, mpq(7, 2)):
        assert starprod.associator(f, g, h, m).is_zero()
        assert starprod.check_associativity(f, g, h, [m], pin=False)["pass"]
