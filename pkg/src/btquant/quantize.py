"""Toeplitz quantization ``Op_m``, Husimi functions ``Hus_m`` and their composites.

Operators on ``Sym^m(C^d)`` are stored in the coherent-monomial basis
``u_alpha`` (``|alpha| = m``), in which the coherent vector is
``x^{(m)} = sum_alpha x^alpha u_alpha`` and the Gram matrix is diagonal with
``G_alpha = m!/alpha!``.  Entries stay Gaussian-rational; the Gram travels
implicitly with ``(d, m)``.  Matrix convention: ``T u_beta = sum_alpha
T[alpha, beta] u_alpha``.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from typing import Dict

import numpy as np
from gmpy2 import lcm, mpq, mpz

from . import polys
from .exactcore import (
    DimensionError,
    GaussianRational,
    Rational,
    dim_sym,
    factorial,
    format_rational,
    multi_factorial,
    multi_indices,
)
from .symbols import Symbol, symbol_from_poly

_Q0 = mpq(0)
_Q1 = mpq(1)


class NotHermitianError(ValueError):
    """Raised when a Hermitian operator was required."""


@lru_cache(maxsize=None)
def basis(d: int, m: int) -> tuple:
    return multi_indices(d, m)


@lru_cache(maxsize=None)
def basis_index(d: int, m: int) -> Dict[tuple, int]:
    return {a: i for i, a in enumerate(basis(d, m))}


@lru_cache(maxsize=None)
def gram(d: int, m: int) -> tuple:
    """Diagonal Gram weights ``m!/alpha!`` of the coherent-monomial basis."""
    fm = factorial(m)
    return tuple(mpq(fm, multi_factorial(a)) for a in basis(d, m))


def _zeros(n: int) -> np.ndarray:
    out = np.empty((n, n), dtype=object)
    out.fill(_Q0)
    return out


def _integer_matrix(a: np.ndarray):
    den = mpz(1)
    for v in a.flat:
        den = lcm(den, v.denominator)
    return den, np.vectorize(lambda v: mpz(v * den), otypes=[object])(a)


def _exact_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rational matrix product through integer numerators (no gcd per partial sum)."""
    da, ia = _integer_matrix(a)
    db, ib = _integer_matrix(b)
    den = da * db
    return np.vectorize(lambda v: mpq(v, den), otypes=[object])(ia @ ib)


def _as_obj(a) -> np.ndarray:
    arr = np.array(a, dtype=object)
    return arr


class OperatorMatrix:
    """Exact operator on ``Sym^m(C^d)`` in the coherent-monomial basis."""

    __slots__ = ("d", "m", "re", "im")

    def __init__(self, d: int, m: int, re: np.ndarray, im: np.ndarray | None = None):
        n = dim_sym(d, m)
        re = np.asarray(re, dtype=object)
        if re.shape != (n, n):
            raise DimensionError(f"expected a {n}x{n} matrix for d={d}, m={m}, got {re.shape}")
        self.d = d
        self.m = m
        self.re = re
        self.im = _zeros(n) if im is None else np.asarray(im, dtype=object)

    # -- constructors
    @property
    def dim(self) -> int:
        return self.re.shape[0]

    @classmethod
    def zero(cls, d: int, m: int) -> "OperatorMatrix":
        n = dim_sym(d, m)
        return cls(d, m, _zeros(n), _zeros(n))

    @classmethod
    def identity(cls, d: int, m: int) -> "OperatorMatrix":
        out = cls.zero(d, m)
        for i in range(out.dim):
            out.re[i, i] = _Q1
        return out

    @classmethod
    def from_entries(cls, d: int, m: int, entries) -> "OperatorMatrix":
        n = dim_sym(d, m)
        re, im = _zeros(n), _zeros(n)
        for i in range(n):
            for j in range(n):
                v = GaussianRational.coerce(entries[i][j])
                re[i, j], im[i, j] = v.re, v.im
        return cls(d, m, re, im)

    def entry(self, i: int, j: int) -> GaussianRational:
        return GaussianRational(self.re[i, j], self.im[i, j])

    def entries(self) -> list:
        return [[self.entry(i, j) for j in range(self.dim)] for i in range(self.dim)]

    def _check(self, other: "OperatorMatrix") -> None:
        if (self.d, self.m) != (other.d, other.m):
            raise DimensionError(f"operators on (d={self.d}, m={self.m}) and (d={other.d}, m={other.m})")

    # -- algebra
    def __add__(self, other):
        self._check(other)
        return OperatorMatrix(self.d, self.m, self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        self._check(other)
        return OperatorMatrix(self.d, self.m, self.re - other.re, self.im - other.im)

    def __neg__(self):
        return OperatorMatrix(self.d, self.m, -self.re, -self.im)

    def scale(self, c) -> "OperatorMatrix":
        c = GaussianRational.coerce(c)
        if not c.im:
            return OperatorMatrix(self.d, self.m, self.re * c.re, self.im * c.re)
        return OperatorMatrix(self.d, self.m, self.re * c.re - self.im * c.im, self.re * c.im + self.im * c.re)

    def __matmul__(self, other):
        self._check(other)
        ar, ai, br, bi = self.re, self.im, other.re, other.im
        a_real = not ai.any()
        b_real = not bi.any()
        re = _exact_matmul(ar, br)
        if a_real and b_real:
            return OperatorMatrix(self.d, self.m, re, _zeros(self.dim))
        if not (a_real or b_real):
            re = re - _exact_matmul(ai, bi)
        im = _zeros(self.dim)
        if not b_real:
            im = im + _exact_matmul(ar, bi)
        if not a_real:
            im = im + _exact_matmul(ai, br)
        return OperatorMatrix(self.d, self.m, re, im)

    def __mul__(self, other):
        if isinstance(other, OperatorMatrix):
            return self @ other
        return self.scale(other)

    __rmul__ = scale

    def adjoint(self) -> "OperatorMatrix":
        """Operator adjoint ``G^{-1} T^dagger G`` for the Gram inner product."""
        g = np.array(gram(self.d, self.m), dtype=object)
        factor = np.empty((self.dim, self.dim), dtype=object)
        for i in range(self.dim):
            for j in range(self.dim):
                factor[i, j] = g[j] / g[i]
        return OperatorMatrix(self.d, self.m, self.re.T * factor, -self.im.T * factor)

    def trace(self) -> GaussianRational:
        return GaussianRational(sum(self.re.diagonal(), _Q0), sum(self.im.diagonal(), _Q0))

    def is_zero(self) -> bool:
        return not (self.re.any() or self.im.any())

    def is_hermitian(self) -> bool:
        return self == self.adjoint()

    def __eq__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        if (self.d, self.m) != (other.d, other.m):
            return False
        return bool(np.all(self.re == other.re) and np.all(self.im == other.im))

    __hash__ = None

    def __repr__(self):
        return f"OperatorMatrix(d={self.d}, m={self.m}, dim={self.dim})"

    def gram_form(self) -> tuple:
        """Real and imaginary parts of ``G T`` (Hermitian iff the operator is)."""
        g = np.array(gram(self.d, self.m), dtype=object)[:, None]
        return self.re * g, self.im * g

    # -- floating views
    def to_complex(self) -> np.ndarray:
        to_f = np.vectorize(float, otypes=[float])
        return to_f(self.re) + 1j * to_f(self.im)

    def orthonormal(self) -> np.ndarray:
        """Double-precision matrix in the Gram-orthonormalized basis."""
        s = np.sqrt(np.array([float(g) for g in gram(self.d, self.m)]))
        return (s[:, None] * self.to_complex()) / s[None, :]

    def hermitian_part(self) -> "OperatorMatrix":
        return (self + self.adjoint()).scale(mpq(1, 2))


def _coerce_symbol_poly(f, d: int) -> polys.Poly:
    if isinstance(f, Symbol):
        if f.d != d:
            raise DimensionError(f"symbol dimension {f.d} != {d}")
        return f.representative()
    return f


@lru_cache(maxsize=None)
def _basis_tables(d: int, m: int):
    """Basis as an integer array plus a dense lookup from mixed-radix codes to indices."""
    B = np.array(basis(d, m), dtype=np.int64).reshape(-1, d)
    radix = (m + 1) ** np.arange(d, dtype=np.int64)
    lookup = np.full((m + 1) ** d, -1, dtype=np.int64)
    lookup[B @ radix] = np.arange(B.shape[0])
    return B, radix, lookup


def op_poly(p: polys.Poly, d: int, m: int) -> OperatorMatrix:
    """Toeplitz operator of an arbitrary (balanced) polynomial representative.

    The entry for a monomial ``x^g conj(x)^e`` at ``(alpha, beta)`` with
    ``beta = alpha + g - e`` is ``d_m m! (d-1)!/(d-1+|g|+m)!`` times the
    integer ``(g + alpha)!/beta!``.
    """
    B, radix, lookup = _basis_tables(d, m)
    n = B.shape[0]
    re, im = _zeros(n), _zeros(n)
    base = mpq(n * factorial(m) * factorial(d - 1))
    for (g, e), c in p.items():
        if len(g) != d:
            raise DimensionError(f"monomial {(g, e)} does not live in dimension {d}")
        ga = np.asarray(g, dtype=np.int64)
        ea = np.asarray(e, dtype=np.int64)
        beta = B + (ga - ea)
        ok = np.all(beta >= 0, axis=1)
        if not ok.any():
            continue
        rows = np.nonzero(ok)[0]
        cols = lookup[beta[ok] @ radix]
        top = B[ok] + ga
        w = np.ones(rows.shape[0], dtype=np.int64)
        for k in range(d):
            for t in range(int(ea[k])):
                w *= top[:, k] - t
        scale = base / factorial(d - 1 + sum(g) + m)
        w_obj = w.astype(object)
        if c.re:
            re[rows, cols] += w_obj * (scale * c.re)
        if c.im:
            im[rows, cols] += w_obj * (scale * c.im)
    return OperatorMatrix(d, m, re, im)


def op_m(f: Symbol, m: int) -> OperatorMatrix:
    """Toeplitz quantization ``Op_m[f]``."""
    return op_poly(f.reduced(), f.d, m)


def hus_poly(T: OperatorMatrix) -> polys.Poly:
    """Polynomial ``sum G_alpha T[alpha,beta] x^beta conj(x)^alpha`` (not canonicalized)."""
    B = basis(T.d, T.m)
    G = gram(T.d, T.m)
    out: polys.Poly = {}
    for i, a in enumerate(B):
        for j, b in enumerate(B):
            r, s = T.re[i, j], T.im[i, j]
            if r or s:
                out[(b, a)] = GaussianRational(G[i] * r, G[i] * s)
    return out


def hus_m(T: OperatorMatrix) -> Symbol:
    """Husimi function ``z -> <z|T|z>`` of an operator."""
    return symbol_from_poly(T.d, hus_poly(T))


def berezin_multiplier(d: int, m: int, n) -> Rational:
    """Eigenvalue of ``Ber_m`` on ``H_{n,n}``: ``m!(m+d-1)!/((m-n)!(m+d-1+n)!)``."""
    n = int(n)
    if n > m:
        return _Q0
    return mpq(factorial(m) * factorial(m + d - 1), factorial(m - n) * factorial(m + d - 1 + n))


def ber_m(f: Symbol, m: int) -> Symbol:
    """Berezin transform computed by composition ``Hus_m o Op_m``."""
    return hus_m(op_m(f, m))


def ber_m_spectral(f: Symbol, m: int) -> Symbol:
    """Berezin transform computed by isotypic scaling."""
    return f.map_components(lambda n: berezin_multiplier(f.d, m, n))


def op_hus_m(T: OperatorMatrix) -> OperatorMatrix:
    """``Op_m[Hus_m[T]]``; the Husimi polynomial is quantized without canonicalizing."""
    return op_poly(hus_poly(T), T.d, T.m)


def coherent_vector(p, m: int) -> np.ndarray:
    """Coordinates of ``x^{(m)}`` in the orthonormalized basis."""
    p = np.asarray(p, dtype=complex)
    d = p.shape[0]
    B = basis(d, m)
    G = gram(d, m)
    return np.array([np.prod(p ** np.array(a)) * math.sqrt(float(g)) for a, g in zip(B, G)])


def coherent_projector(p, m: int) -> np.ndarray:
    v = coherent_vector(p, m)
    return np.outer(v, v.conj())


# -- exact positivity

def _common_denominator(*arrays) -> mpz:
    den = mpz(1)
    for arr in arrays:
        for v in arr.flat:
            q = v.denominator
            if q != 1:
                den = den * q // math.gcd(int(den), int(q))
    return den


def _psd_gaussian_integer(R: np.ndarray, I: np.ndarray) -> bool:
    """Fraction-free elimination with symmetric pivoting on a Hermitian
    Gaussian-integer matrix ``R + iI``; returns the psd verdict."""
    prev = mpz(1)
    while R.shape[0]:
        diag = R.diagonal()
        if any(v < 0 for v in diag):
            return False
        zero = [i for i, v in enumerate(diag) if v == 0]
        if zero:
            for i in zero:
                if R[i].any() or I[i].any():
                    return False
            keep = [i for i in range(R.shape[0]) if diag[i] != 0]
            R = R[np.ix_(keep, keep)]
            I = I[np.ix_(keep, keep)]
            continue
        p = min(range(R.shape[0]), key=lambda i: R[i, i])
        piv = R[p, p]
        cr, ci = R[:, p].copy(), I[:, p].copy()
        rr, ri = R[p, :].copy(), I[p, :].copy()
        newR = piv * R - (np.outer(cr, rr) - np.outer(ci, ri))
        newI = piv * I - (np.outer(cr, ri) + np.outer(ci, rr))
        keep = [i for i in range(R.shape[0]) if i != p]
        R = newR[np.ix_(keep, keep)]
        I = newI[np.ix_(keep, keep)]
        if prev != 1:
            R = R // prev
            I = I // prev
        prev = piv
    return True


def is_psd(T: OperatorMatrix) -> bool:
    """Exact test of operator positivity for an operator that is Hermitian
    with respect to the Gram inner product."""
    R, I = T.gram_form()
    if not (np.all(R == R.T) and np.all(I == -I.T)):
        raise NotHermitianError("is_psd requires a Hermitian operator")
    den = _common_denominator(R, I)
    Rz = np.empty(R.shape, dtype=object)
    Iz = np.empty(I.shape, dtype=object)
    for idx in np.ndindex(R.shape):
        Rz[idx] = mpz(R[idx] * den)
        Iz[idx] = mpz(I[idx] * den)
    return _psd_gaussian_integer(Rz, Iz)


def min_eigenvalue(T: OperatorMatrix) -> float:
    """Floating smallest eigenvalue of a Hermitian operator."""
    A = T.orthonormal()
    return float(np.linalg.eigvalsh((A + A.conj().T) / 2)[0])


# -- norms

def schatten_power(T: OperatorMatrix, p: int) -> Rational:
    """Exact ``||T||_p^p = Tr((T^* T)^{p/2})`` for even ``p``."""
    if p <= 0 or p % 2:
        raise ValueError("exact Schatten powers need a positive even exponent")
    if p == 2:
        # Tr(T^* T) = sum_ij (G_i / G_j) |T_ij|^2
        g = gram(T.d, T.m)
        return sum((g[i] / g[j] * (T.re[i, j] ** 2 + T.im[i, j] ** 2)
                    for i in range(T.dim) for j in range(T.dim) if T.re[i, j] or T.im[i, j]), _Q0)
    A = T.adjoint() @ T
    P = A
    for _ in range(p // 2 - 1):
        P = P @ A
    return P.trace().re


def schatten_norm_float(T: OperatorMatrix, p: float) -> float:
    s = np.linalg.svd(T.orthonormal(), compute_uv=False)
    if math.isinf(p):
        return float(s.max(initial=0.0))
    return float(np.sum(s ** p) ** (1.0 / p))


# -- serialization

def matrix_to_json(T: OperatorMatrix) -> dict:
    entries = [[{"re": format_rational(T.re[i, j]), "im": format_rational(T.im[i, j])} for j in range(T.dim)]
               for i in range(T.dim)]
    return {"d": T.d, "m": T.m, "basis": "coherent-monomial", "entries": entries}


def matrix_from_json(obj) -> OperatorMatrix:
    if isinstance(obj, str):
        obj = json.loads(obj)
    basis_name = obj.get("basis", "coherent-monomial")
    if basis_name != "coherent-monomial":
        raise ValueError(f"unsupported basis {basis_name!r}")
    d, m = int(obj["d"]), int(obj["m"])
    entries = [[GaussianRational.from_json(v) for v in row] for row in obj["entries"]]
    return OperatorMatrix.from_entries(d, m, entries)


def random_operator(d: int, m: int, rng: np.random.Generator, *, coeff_range: int = 3,
                    hermitian: bool = False) -> OperatorMatrix:
    n = dim_sym(d, m)
    re = np.array([[mpq(int(rng.integers(-coeff_range, coeff_range + 1))) for _ in range(n)] for _ in range(n)],
                  dtype=object)
    im = np.array([[mpq(int(rng.integers(-coeff_range, coeff_range + 1))) for _ in range(n)] for _ in range(n)],
                  dtype=object)
    T = OperatorMatrix(d, m, re, im)
    return T.hermitian_part() if hermitian else T
