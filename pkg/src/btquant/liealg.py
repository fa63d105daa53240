"""The ``sl(d)`` action on ``Sym^m(C^d)`` and superoperators on its endomorphisms.

Superoperators are dense ``N x N`` matrices (``N = d_m^2``) acting on the
row-major vectorization of an operator matrix, so ``vec(A S B)`` equals
``(A kron B^T) vec(S)``.  Isotypic projectors are Lagrange polynomials in
``Cas/2`` whose spectrum ``{n(n+d-1)}`` is known in advance; they are
evaluated block by block on the connected components of the sparsity
pattern of ``Cas``, which keeps exact arithmetic cheap.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, List, Sequence

import numpy as np
from gmpy2 import lcm, mpq, mpz

from .exactcore import GaussianRational, Rational, casimir_value, dim_sym, rational
from .quantize import (
    OperatorMatrix,
    _psd_gaussian_integer,
    _zeros,
    basis,
    basis_index,
    berezin_multiplier,
    gram,
)

_Q0 = mpq(0)
_Q1 = mpq(1)


def e_op(i: int, j: int, d: int, m: int) -> OperatorMatrix:
    """Matrix unit ``E_{i,j} = x_i d/dx_j`` on degree-``m`` polynomials (1-based indices)."""
    if not (1 <= i <= d and 1 <= j <= d):
        raise IndexError(f"matrix unit E_({i},{j}) out of range for d={d}")
    T = OperatorMatrix.zero(d, m)
    for col, row, val in _e_entries(d, m, i - 1, j - 1):
        T.re[row, col] = mpq(val)
    return T


@lru_cache(maxsize=None)
def _e_entries(d: int, m: int, i: int, j: int) -> tuple:
    """Nonzero entries ``(col, row, value)`` of ``E_{i,j}`` (0-based).

    Differentiating ``(x + t x_j e_i)^{(m)}`` gives ``E_ij u_b = (b_i + 1) u_{b + e_i - e_j}``.
    """
    idx = basis_index(d, m)
    out = []
    for col, a in enumerate(basis(d, m)):
        if not a[j]:
            continue
        b = list(a)
        b[j] -= 1
        b[i] += 1
        out.append((col, idx[tuple(b)], b[i]))
    return tuple(out)


def casimir_q(d: int, m: int) -> OperatorMatrix:
    """Quadratic Casimir on ``Sym^m(C^d)`` assembled from matrix units."""
    n = dim_sym(d, m)
    Q = OperatorMatrix.zero(d, m)
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            if i != j:
                Q = Q + e_op(i, j, d, m) @ e_op(j, i, d, m)
    diag_sum = OperatorMatrix.zero(d, m)
    for k in range(1, d + 1):
        diag_sum = diag_sum + e_op(k, k, d, m)
    for i in range(1, d + 1):
        t = e_op(i, i, d, m) - diag_sum.scale(mpq(1, d))
        Q = Q + t @ t
    assert Q.dim == n
    return Q


class SuperOperator:
    """Exact linear map on operators of ``Sym^m(C^d)``."""

    __slots__ = ("d", "m", "re", "im")

    def __init__(self, d: int, m: int, re: np.ndarray, im: np.ndarray | None = None):
        n = dim_sym(d, m) ** 2
        re = np.asarray(re, dtype=object)
        if re.shape != (n, n):
            raise ValueError(f"superoperator must be {n}x{n}, got {re.shape}")
        self.d, self.m = d, m
        self.re = re
        self.im = _zeros(n) if im is None else np.asarray(im, dtype=object)

    @property
    def size(self) -> int:
        return self.re.shape[0]

    @classmethod
    def identity(cls, d: int, m: int) -> "SuperOperator":
        n = dim_sym(d, m) ** 2
        re = _zeros(n)
        for k in range(n):
            re[k, k] = _Q1
        return cls(d, m, re)

    @classmethod
    def zero(cls, d: int, m: int) -> "SuperOperator":
        n = dim_sym(d, m) ** 2
        return cls(d, m, _zeros(n))

    @classmethod
    def from_map(cls, d: int, m: int, fn: Callable[[OperatorMatrix], OperatorMatrix]) -> "SuperOperator":
        """Matrix of an arbitrary linear map, built column by column."""
        n = dim_sym(d, m)
        re, im = _zeros(n * n), _zeros(n * n)
        for a in range(n):
            for b in range(n):
                S = OperatorMatrix.zero(d, m)
                S.re[a, b] = _Q1
                img = fn(S)
                re[:, a * n + b] = img.re.reshape(-1)
                im[:, a * n + b] = img.im.reshape(-1)
        return cls(d, m, re, im)

    def _check(self, other: "SuperOperator") -> None:
        if (self.d, self.m) != (other.d, other.m):
            raise ValueError("superoperators act on different spaces")

    def apply(self, T: OperatorMatrix) -> OperatorMatrix:
        if (T.d, T.m) != (self.d, self.m):
            raise ValueError("operator does not match superoperator space")
        n = T.dim
        vr, vi = T.re.reshape(-1), T.im.reshape(-1)
        re = self.re @ vr
        im = self.re @ vi
        if self.im.any():
            re = re - self.im @ vi
            im = im + self.im @ vr
        return OperatorMatrix(self.d, self.m, re.reshape(n, n), im.reshape(n, n))

    __call__ = apply

    def __add__(self, other):
        self._check(other)
        return SuperOperator(self.d, self.m, self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        self._check(other)
        return SuperOperator(self.d, self.m, self.re - other.re, self.im - other.im)

    def scale(self, c) -> "SuperOperator":
        c = GaussianRational.coerce(c)
        if not c.im:
            return SuperOperator(self.d, self.m, self.re * c.re, self.im * c.re)
        return SuperOperator(self.d, self.m, self.re * c.re - self.im * c.im, self.re * c.im + self.im * c.re)

    def __matmul__(self, other):
        self._check(other)
        re = self.re @ other.re
        im = _zeros(self.size)
        if self.im.any() or other.im.any():
            re = re - self.im @ other.im
            im = self.re @ other.im + self.im @ other.re
        return SuperOperator(self.d, self.m, re, im)

    def is_real(self) -> bool:
        return not self.im.any()

    def __eq__(self, other):
        if not isinstance(other, SuperOperator):
            return NotImplemented
        return (self.d, self.m) == (other.d, other.m) and bool(
            np.all(self.re == other.re) and np.all(self.im == other.im))

    __hash__ = None

    def __repr__(self):
        return f"SuperOperator(d={self.d}, m={self.m}, size={self.size})"

    def to_complex(self) -> np.ndarray:
        to_f = np.vectorize(float, otypes=[float])
        return to_f(self.re) + 1j * to_f(self.im)

    def blocks(self) -> List[List[int]]:
        """Connected components of the (symmetrized) nonzero pattern."""
        pattern = (self.re != 0) | (self.im != 0)
        pattern = pattern | pattern.T
        seen = np.zeros(self.size, dtype=bool)
        comps = []
        for start in range(self.size):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in np.nonzero(pattern[v])[0]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(int(w))
            comps.append(sorted(comp))
        return comps


def _vec_index(n: int, a: int, b: int) -> int:
    return a * n + b


@lru_cache(maxsize=None)
def _cas_cached(d: int, m: int) -> SuperOperator:
    n = dim_sym(d, m)
    N = n * n
    re = _zeros(N)
    q0 = casimir_value(d, 0, m)
    for k in range(N):
        re[k, k] += 2 * q0
    # off-diagonal matrix units: S -> E_ij S E_ji
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            A = _e_entries(d, m, i, j)  # (col, row, val) of E_ij
            B = _e_entries(d, m, j, i)  # E_ji
            for a, r, va in A:
                for c, b, vb in B:
                    # (E_ij S E_ji)[r, c] += E_ij[r, a] S[a, b] E_ji[b, c]
                    re[_vec_index(n, r, c), _vec_index(n, a, b)] -= 2 * va * vb
    B_ = basis(d, m)
    for i in range(d):
        t = [mpq(a[i]) - mpq(m, d) for a in B_]
        for a in range(n):
            for b in range(n):
                re[_vec_index(n, a, b), _vec_index(n, a, b)] -= 2 * t[a] * t[b]
    return SuperOperator(d, m, re)


def cas_super(d: int, m: int) -> SuperOperator:
    """Casimir superoperator ``S -> QS + SQ - 2 sum E_ij S E_ji - 2 sum E~_i S E~_i``."""
    return _cas_cached(d, m)


def half_cas_eigenvalue(d: int, n: int) -> int:
    return n * (n + d - 1)


def spectral_function(d: int, m: int, values: Sequence) -> SuperOperator:
    """``sum_n values[n] P_n`` where ``P_n`` projects onto the ``n``-th isotype of
    ``End(Sym^m)``, computed by Lagrange interpolation in ``Cas/2``."""
    values = [rational(v) if not isinstance(v, GaussianRational) else v for v in values]
    if len(values) != m + 1:
        raise ValueError(f"need {m + 1} spectral values, got {len(values)}")
    C = cas_super(d, m)
    lam = [half_cas_eigenvalue(d, k) for k in range(m + 1)]
    N = C.size
    out = _zeros(N)
    for block in C.blocks():
        idx = np.ix_(block, block)
        Cb = C.re[idx] * mpq(1, 2)
        size = len(block)
        eye = _zeros(size)
        for k in range(size):
            eye[k, k] = _Q1
        acc = _zeros(size)
        for n in range(m + 1):
            v = values[n]
            if not v:
                continue
            P = eye
            for k in range(m + 1):
                if k == n:
                    continue
                P = (P @ (Cb - eye * lam[k])) * mpq(1, lam[n] - lam[k])
            acc = acc + P * v
        out[idx] = acc
    return SuperOperator(d, m, out)


def isotypic_projector_ops(d: int, m: int, n: int) -> SuperOperator:
    if not 0 <= n <= m:
        raise ValueError(f"isotype {n} out of range 0..{m}")
    return spectral_function(d, m, [1 if k == n else 0 for k in range(m + 1)])


def one_minus_cas_over(alpha, d: int, m: int) -> SuperOperator:
    alpha = rational(alpha)
    if alpha == 0:
        raise ZeroDivisionError("alpha must be nonzero")
    return SuperOperator.identity(d, m) - cas_super(d, m).scale(1 / alpha)


def cp_threshold(d: int, m: int) -> Rational:
    """Value of ``alpha`` above which ``1 - Cas/alpha`` is completely positive."""
    return mpq(2 * m * (m + d) * (d - 1), d)


def generalized_ber(k: int, d: int, m: int) -> SuperOperator:
    """``Upsilon_k(Cas/2)`` on ``End(Sym^m)``, a unital channel for ``k >= m``."""
    if k < m:
        raise ValueError("generalized Berezin channel needs k >= m")
    return spectral_function(d, m, [berezin_multiplier(d, k, n) for n in range(m + 1)])


def _choi_orthonormal(Phi: SuperOperator) -> np.ndarray:
    n = dim_sym(Phi.d, Phi.m)
    s = np.sqrt(np.array([float(g) for g in gram(Phi.d, Phi.m)]))
    P = Phi.to_complex().reshape(n, n, n, n)  # [r, c, i, j]
    P = P * (s[:, None, None, None] / s[None, :, None, None]) * (s[None, None, None, :] / s[None, None, :, None])
    C = P.transpose(2, 0, 3, 1).reshape(n * n, n * n)
    return (C + C.conj().T) / 2


def choi_min_eig(Phi: SuperOperator) -> float:
    """Smallest eigenvalue of the Choi matrix in the Gram-orthonormal basis."""
    return float(np.linalg.eigvalsh(_choi_orthonormal(Phi))[0])


def choi_is_psd_exact(Phi: SuperOperator, max_dim: int = 20) -> bool:
    """Exact complete-positivity test, built on the non-orthonormal basis
    ``sum_ij |u_i><u_j| (x) Phi(|u_i><u_j|)`` with Gram ``G (x) G``."""
    n = dim_sym(Phi.d, Phi.m)
    if n > max_dim:
        raise ValueError(f"exact Choi test limited to d_m <= {max_dim}")
    g = list(gram(Phi.d, Phi.m))
    R = _zeros(n * n)
    I = _zeros(n * n)
    Pr = Phi.re.reshape(n, n, n, n)
    Pi = Phi.im.reshape(n, n, n, n)
    for i in range(n):
        for j in range(n):
            # |u_i><u_j| is the matrix G_j e_i e_j^T; the row weight G_i G_r turns
            # the operator into its Gram form
            for r in range(n):
                for c in range(n):
                    w = g[i] * g[r] * g[j] * g[j]
                    R[i * n + r, j * n + c] = w * Pr[r, c, i, j]
                    I[i * n + r, j * n + c] = w * Pi[r, c, i, j]
    den = mpz(1)
    for arr in (R, I):
        for v in arr.flat:
            den = lcm(den, v.denominator)
    Rz = np.vectorize(lambda v: mpz(v * den), otypes=[object])(R)
    Iz = np.vectorize(lambda v: mpz(v * den), otypes=[object])(I)
    if not (np.all(Rz == Rz.T) and np.all(Iz == -Iz.T)):
        raise ValueError("Choi matrix is not Hermitian; the map is not Hermiticity preserving")
    return _psd_gaussian_integer(Rz, Iz)


def operator_isotype_dimension(d: int, n: int) -> int:
    """``dim H_{n,n}`` from the branching ``End(Sym^n) = End(Sym^{n-1}) + H_{n,n}``."""
    prev = dim_sym(d, n - 1) ** 2 if n else 0
    return dim_sym(d, n) ** 2 - prev
