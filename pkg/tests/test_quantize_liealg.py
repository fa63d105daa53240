import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from btquant import liealg, quantize, symbols
from btquant.exactcore import DimensionError, GaussianRational, casimir_value, dim_sym
from btquant.liealg import SuperOperator
from btquant.quantize import OperatorMatrix


def test_op_of_coordinate_square_frozen():
    # frozen from a hand computation: Op_1[|x_1|^2] = diag(2/3, 1/3) for d = 2
    T = quantize.op_m(symbols.coordinate_symbol(2, 0, 0), 1)
    assert T == OperatorMatrix.from_entries(2, 1, [[mpq(2, 3), 0], [0, mpq(1, 3)]])


def test_berezin_multiplier_small_case():
    assert quantize.berezin_multiplier(2, 1, 1) == mpq(1, 3)
    assert quantize.berezin_multiplier(3, 2, 3) == 0


def test_op_matches_monte_carlo_coherent_integral():
    d, m = 2, 2
    rng = np.random.default_rng(4)
    f = symbols.random_symbol(d, 2, rng)
    pts = symbols.sample_cp(9, 100_000, d)
    vals = f(pts)
    vecs = np.array([quantize.coherent_vector(p, m) for p in pts])
    mc = dim_sym(d, m) * np.einsum("k,ki,kj->ij", vals, vecs, vecs.conj()) / len(pts)
    assert np.abs(mc - quantize.op_m(f, m).orthonormal()).max() < 0.1


def test_husimi_is_coherent_expectation():
    d, m = 3, 2
    rng = np.random.default_rng(8)
    T = quantize.random_operator(d, m, rng)
    h = quantize.hus_m(T)
    A = T.orthonormal()
    for p in symbols.sample_cp(2, 5, d):
        v = quantize.coherent_vector(p, m)
        assert symbols.evaluate(h, p) == pytest.approx(v.conj() @ A @ v)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.integers(0, 3))
def test_toeplitz_map_is_positive_and_trace_preserving(seed, d, m):
    rng = np.random.default_rng(seed)
    f = symbols.random_symbol(d, 2, rng)
    g = symbols.multiply(f, f.conj())
    T = quantize.op_m(g, m)
    assert quantize.is_psd(T)
    assert T.trace() == symbols.integral(g) * dim_sym(d, m)
    assert quantize.op_m(f.conj(), m) == quantize.op_m(f, m).adjoint()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.integers(0, 4))
def test_berezin_two_routes(seed, d, m):
    f = symbols.random_symbol(d, 3, np.random.default_rng(seed))
    assert quantize.ber_m(f, m) == quantize.ber_m_spectral(f, m)


def test_exact_psd_agrees_with_eigenvalues():
    rng = np.random.default_rng(21)
    for _ in range(10):
        T = quantize.random_operator(3, 2, rng, hermitian=True)
        shifted = T + OperatorMatrix.identity(3, 2).scale(3)
        for S in (T, shifted):
            lam = quantize.min_eigenvalue(S)
            if abs(lam) > 1e-9:
                assert quantize.is_psd(S) == (lam > 0)
    with pytest.raises(quantize.NotHermitianError):
        quantize.is_psd(quantize.random_operator(2, 2, rng) + OperatorMatrix.identity(2, 2).scale(GaussianRational(0, 1)))


def test_schatten_powers_match_floating():
    rng = np.random.default_rng(5)
    T = quantize.random_operator(2, 3, rng)
    for p in (2, 4):
        exact = float(quantize.schatten_power(T, p)) ** (1 / p)
        assert exact == pytest.approx(quantize.schatten_norm_float(T, p), rel=1e-12)
    with pytest.raises(ValueError):
        quantize.schatten_power(T, 3)


def test_matrix_json_roundtrip_and_shape_check():
    T = quantize.random_operator(2, 2, np.random.default_rng(0))
    assert quantize.matrix_from_json(quantize.matrix_to_json(T)) == T
    with pytest.raises(DimensionError):
        OperatorMatrix(2, 2, np.zeros((2, 2), dtype=object))


def test_matrix_units_commutation():
    d, m = 3, 2
    E = {(i, j): liealg.e_op(i, j, d, m) for i in range(1, d + 1) for j in range(1, d + 1)}
    zero = OperatorMatrix.zero(d, m)
    for (i, j), A in E.items():
        for (k, l), B in E.items():
            expected = zero
            if j == k:
                expected = expected + E[(i, l)]
            if l == i:
                expected = expected - E[(k, j)]
            assert A @ B - B @ A == expected


def test_casimir_is_scalar_on_symmetric_power():
    for d in (2, 3):
        for m in range(4):
            Q = liealg.casimir_q(d, m)
            assert Q == OperatorMatrix.identity(d, m).scale(casimir_value(d, m, 0))


def test_cas_super_spectrum_and_projectors():
    d, m = 2, 2
    total = SuperOperator.zero(d, m)
    C = liealg.cas_super(d, m)
    for n in range(m + 1):
        P = liealg.isotypic_projector_ops(d, m, n)
        assert P @ P == P
        assert C @ P == P.scale(2 * liealg.half_cas_eigenvalue(d, n))
        total = total + P
    assert total == SuperOperator.identity(d, m)
    rank = np.linalg.matrix_rank(liealg.isotypic_projector_ops(d, m, 1).to_complex())
    assert rank == liealg.operator_isotype_dimension(d, 1)


def test_op_hus_is_generalized_berezin_at_k_equal_m():
    d, m = 2, 3
    direct = SuperOperator.from_map(d, m, quantize.op_hus_m)
    assert direct == liealg.generalized_ber(m, d, m)
    with pytest.raises(ValueError):
        liealg.generalized_ber(m - 1, d, m)


def test_choi_threshold_exact_and_below():
    d, m = 2, 1
    alpha = liealg.cp_threshold(d, m)
    assert liealg.choi_is_psd_exact(liealg.one_minus_cas_over(alpha, d, m))
    below = liealg.one_minus_cas_over(alpha * mpq(99, 100), d, m)
    assert not liealg.choi_is_psd_exact(below)
    assert liealg.choi_min_eig(below) < 0


def test_e_op_index_range():
    with pytest.raises(IndexError):
        liealg.e_op(0, 1, 2, 1)
