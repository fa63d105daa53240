import itertools

import mpmath
import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from btquant import asymptotics, liealg, majorization, quantize, symbols
from btquant.exactcore import Interval
from btquant.majorization import MassMismatchError, check_majorization, rearrange_eig_values


def mp_interval(iv):
    return mpmath.mpf(iv.lo.numerator) / iv.lo.denominator, mpmath.mpf(iv.hi.numerator) / iv.hi.denominator


def upsilon2_oracle(d, m):
    # e_2 = (p_1^2 - p_2)/2 with p_2 from trigamma values via partial fractions
    c = d - 1
    p1 = mpmath.fsum(mpmath.mpf(1) / (m + j) for j in range(1, d)) / c
    telescoped = mpmath.fsum(mpmath.mpf(1) / (m + j) for j in range(1, d))
    p2 = (mpmath.psi(1, m + 1) + mpmath.psi(1, m + c + 1) - 2 * telescoped / c) / c ** 2
    return (p1 ** 2 - p2) / 2


@pytest.mark.parametrize("d,m", [(2, 0), (2, 3), (3, 1), (3, 6)])
def test_upsilon_two_against_trigamma_oracle(d, m):
    with mpmath.workdps(120):
        u = asymptotics.upsilon(d, m, 2)
        lo, hi = mp_interval(u)
        ref = upsilon2_oracle(d, m)
        assert lo - mpmath.mpf("1e-90") <= ref <= hi + mpmath.mpf("1e-90")
    assert u.width < 1e-20


def test_upsilon_first_coefficients():
    assert asymptotics.upsilon(2, 0, 1) == Interval(1)
    assert asymptotics.upsilon(3, 1, 1) == Interval(mpq(1, 2) * (mpq(1, 2) + mpq(1, 3)))
    assert asymptotics.upsilon(2, 1, 0) == Interval(1)
    crude = asymptotics.upsilon_simple_bounds(2, 1, 3, 2000)
    assert crude.contains(asymptotics.upsilon(2, 1, 3))


def test_hurwitz_tail_against_mpmath():
    with mpmath.workdps(60):
        for s, a in [(2, 1), (3, 5), (4, 100)]:
            lo, hi = mp_interval(asymptotics.hurwitz_tail(s, a))
            assert lo <= mpmath.zeta(s, a) <= hi


def test_series_and_product_contain_berezin_eigenvalues():
    d, m = 2, 3
    for n in range(1, 3):
        q = n * (n + d - 1)
        lam = quantize.berezin_multiplier(d, m, n)
        assert asymptotics.upsilon_at_spectrum(d, m, q) == lam
        assert asymptotics.upsilon_product_enclosure(d, m, q).contains(lam)
        assert asymptotics.upsilon_series_interval(d, m, q, 12, K=500).contains(lam)
    with pytest.raises(asymptotics.SpectrumError):
        asymptotics.spectral_index(2, 3)


def test_berezin_expansion_small():
    f = symbols.random_symbol(2, 2, np.random.default_rng(3))
    r = asymptotics.verify_berezin_expansion(f, 2, 1, "2")
    assert r["exact"] and r["holds"]
    r = asymptotics.verify_berezin_expansion(f, 2, 2, "4", K=2000)
    assert r["holds"]
    r = asymptotics.verify_berezin_expansion(f, 2, 1, "inf", samples=5000, majorization=True)
    assert r["holds"] and r["majorization"]["holds"]


def test_oph_expansion_small():
    T = quantize.random_operator(2, 2, np.random.default_rng(1), hermitian=True)
    for p in ("2", "inf"):
        assert asymptotics.verify_oph_expansion(T, 2, 2, p, K=2000, majorization=True)["holds"]


def test_sharp_constant_sandwich():
    r = asymptotics.optimal_constant_sandwich(2, 1, 1, K=2000)
    assert r["holds"] and r["tail_monotone"]


# -- majorization


def test_textbook_majorization():
    x = rearrange_eig_values([1, 1, 1])
    y = rearrange_eig_values([3, 0, 0])
    assert check_majorization(x, y).verdict == "majorized"
    assert check_majorization(y, x).verdict == "neither"
    z = rearrange_eig_values([1, 1, 0])
    assert check_majorization(z, x, weak=True).verdict == "weakly-majorized"
    with pytest.raises(MassMismatchError):
        check_majorization(z, x)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=6), st.integers(0, 10_000))
def test_doubly_stochastic_images_are_majorized(x, seed):
    x = np.array(x)
    n = len(x)
    rng = np.random.default_rng(seed)
    perms = list(itertools.permutations(range(n)))[:24]
    w = rng.dirichlet(np.ones(len(perms)))
    D = sum(wi * np.eye(n)[list(p)] for wi, p in zip(w, perms))
    rep = check_majorization(rearrange_eig_values(D @ x), rearrange_eig_values(x), tol=1e-9)
    assert rep.holds
    # Karamata for a convex function
    gap = majorization.karamata_gap(rearrange_eig_values(D @ x), rearrange_eig_values(x), np.square)
    assert gap >= -1e-9


def test_partial_integrals_and_csv():
    p = rearrange_eig_values([2.0, -1.0, 5.0, 0.0])
    assert np.allclose(p.values, [5.0, 2.0, 0.0, -1.0])
    assert p.partial_integral(np.array([0.5]))[0] == pytest.approx(3.5 / 2)
    assert p.total() == pytest.approx(1.5)
    assert p.to_csv().splitlines()[0]


def test_berezin_lieb_sampled():
    f = symbols.random_symbol(2, 2, np.random.default_rng(6), real=True)
    first, second = majorization.check_berezin_lieb(f, 3, 20_000, seed=1)
    assert first.holds and second.holds
    assert first.notes["cap"] == 1e-3
    with pytest.raises(ValueError):
        majorization.rearrange_function(f, 10)


def test_exact_d2_fixture():
    f = symbols.random_symbol(2, 1, np.random.default_rng(0), real=True)
    for m in (1, 4, 8):
        r = majorization.exact_berezin_lieb_d2(f, m)
        assert r["holds"] and r["equality_at_one"]
    with pytest.raises(ValueError):
        majorization.exact_berezin_lieb_d2(symbols.random_symbol(3, 1, np.random.default_rng(0), real=True), 2)


def test_channel_majorization_weak_singular_values():
    d, m = 2, 2
    T = quantize.random_operator(d, m, np.random.default_rng(2))
    rep = majorization.check_channel_majorization(liealg.generalized_ber(m + 1, d, m), T)
    assert rep.holds
