import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from btquant import polys, symbols
from btquant.exactcore import DimensionError, GaussianRational, multi_indices
from btquant.symbols import InvalidSymbolError, Symbol, symbol_from_poly


def naive_mul(p, q):
    out = {}
    for (g1, e1), a in p.items():
        for (g2, e2), b in q.items():
            key = (tuple(x + y for x, y in zip(g1, g2)), tuple(x + y for x, y in zip(e1, e2)))
            polys.add_into(out, {key: a * b})
    return out


def random_poly(d, degree, seed, balanced=True):
    rng = np.random.default_rng(seed)
    p = {}
    for k in range(degree + 1):
        for g in multi_indices(d, k):
            for e in multi_indices(d, k if balanced else int(rng.integers(0, degree + 1))):
                if rng.random() < 0.5:
                    p[(g, e)] = GaussianRational(int(rng.integers(-4, 5)), int(rng.integers(-4, 5)))
    return polys.clean(p)


seeds = st.integers(min_value=0, max_value=10_000)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_mul_matches_schoolbook(seed, d):
    p, q = random_poly(d, 2, seed), random_poly(d, 2, seed + 1, balanced=False)
    assert polys.mul(p, q) == naive_mul(p, q)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_pairing_is_integral_of_product(seed, d):
    p, q = random_poly(d, 2, seed), random_poly(d, 2, seed + 7)
    assert polys.pairing(p, q) == polys.integrate(naive_mul(polys.conj(p), q))


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_reduce_sphere_preserves_values(seed, d):
    p = random_poly(d, 3, seed)
    r = polys.reduce_sphere(p)
    assert not any(g[-1] and e[-1] for g, e in r)
    pts = symbols.sample_cp(seed, 50, d)
    a = polys.CompiledPoly(p, d)(pts)
    b = polys.CompiledPoly(r, d)(pts)
    assert np.allclose(a, b, atol=1e-10)


def test_harmonic_decomposition_components_are_harmonic():
    d = 3
    g, e = (2, 1, 0), (0, 1, 2)
    parts = polys.harmonic_decompose({(g, e): GaussianRational(1)}, d)
    for j, h in parts.items():
        assert polys.laplace(h) == {}
    rebuilt = {}
    for j, h in parts.items():
        polys.add_into(rebuilt, polys.mul_r2_power(h, j))
    assert rebuilt == {(g, e): GaussianRational(1)}


def test_symbol_rejects_unbalanced_monomials():
    with pytest.raises(InvalidSymbolError):
        symbol_from_poly(2, {((1, 0), (0, 0)): 1})
    with pytest.raises(DimensionError):
        symbol_from_poly(2, {((1, 0, 0), (1, 0, 0)): 1})
    with pytest.raises(DimensionError):
        symbols.coordinate_symbol(2, 0, 0) + symbols.coordinate_symbol(3, 0, 0)


def test_sphere_relation_is_built_in():
    d = 3
    total = Symbol.zero(d)
    for k in range(d):
        total = total + symbols.coordinate_symbol(d, k, k)
    assert total == Symbol.constant(d, 1)


def test_coordinate_symbol_harmonic_split():
    f = symbols.coordinate_symbol(2, 0, 0)
    assert symbols.integral(f) == GaussianRational(mpq(1, 2))
    assert sorted(f.components) == [0, 1]
    assert symbols.laplacian(f) == symbols.project_isotypic(f, 1).scale(-8)


def test_inner_product_matches_power_integral():
    rng = np.random.default_rng(3)
    f = symbols.random_symbol(3, 2, rng)
    g = symbols.random_symbol(3, 2, rng)
    assert symbols.inner_product(f, g) == symbols.power_integral([f.conj(), g])


def test_evaluation_against_direct_formula():
    f = symbol_from_poly(2, {((1, 0), (0, 1)): GaussianRational(2, 1), ((1, 1), (1, 1)): 3})
    z = np.array([0.3 + 0.4j, -0.5 + 0.2j])
    # evaluation normalizes the point first
    u = z / np.linalg.norm(z)
    direct = (2 + 1j) * u[0] * np.conj(u[1]) + 3 * abs(u[0]) ** 2 * abs(u[1]) ** 2
    assert symbols.evaluate(f, z) == pytest.approx(direct)


def test_monte_carlo_integral_agrees_with_exact():
    rng = np.random.default_rng(11)
    f = symbols.random_symbol(3, 2, rng, real=True)
    pts = symbols.sample_cp(5, 200_000, 3)
    mc = f(pts).real
    assert abs(mc.mean() - float(symbols.integral(f).re)) < 6 * mc.std() / np.sqrt(mc.size)


def test_json_roundtrip_and_multiply_commutes():
    rng = np.random.default_rng(1)
    f = symbols.random_symbol(2, 2, rng)
    g = symbols.random_symbol(2, 1, rng)
    assert symbols.symbol_from_json(symbols.symbol_to_json(f)) == f
    assert symbols.multiply(f, g) == symbols.multiply(g, f)


def test_poly_of_laplacian_variants():
    f = symbols.coordinate_symbol(3, 0, 1)
    # on H_{1,1} in d = 3: -Delta/4 acts by 3, Delta by -12
    assert symbols.apply_poly_of_laplacian(f, [1, 2]) == f.scale(7)
    assert symbols.apply_poly_of_laplacian(f, [0, 1], variant="laplacian") == f.scale(-12)
    with pytest.raises(ValueError):
        symbols.apply_poly_of_laplacian(f, [1], variant="other")
