"""Exact regular functions on complex projective space.

A :class:`Symbol` is stored by its harmonic decomposition: component ``n``
is the unique harmonic polynomial of bidegree ``(n, n)`` whose restriction
to the sphere is the ``H_{n,n}`` part of the function.  The Laplacian,
isotypic projections and Berezin-type multipliers act diagonally on it.
"""

from __future__ import annotations

import json
from typing import Dict, Iterable, Mapping, Sequence

import numpy as np

from . import polys
from .exactcore import (
    DimensionError,
    GaussianRational,
    G_ZERO,
    Rational,
    format_rational,
    multi_indices,
    rational,
)


class InvalidSymbolError(ValueError):
    """Raised for polynomials that do not descend to projective space."""


class Symbol:
    """Immutable element of the algebra of regular functions."""

    __slots__ = ("d", "components", "_compiled", "_reduced")

    def __init__(self, d: int, components: Mapping[int, polys.Poly]):
        if d < 1:
            raise ValueError("ambient dimension must be positive")
        self.d = d
        self.components: Dict[int, polys.Poly] = {n: dict(p) for n, p in components.items() if p}
        self._compiled = None
        self._reduced = None

    # -- construction helpers
    @classmethod
    def zero(cls, d: int) -> "Symbol":
        return cls(d, {})

    @classmethod
    def constant(cls, d: int, c) -> "Symbol":
        c = GaussianRational.coerce(c)
        zero = (0,) * d
        return cls(d, {0: {(zero, zero): c}} if c else {})

    # -- structure
    @property
    def degree(self) -> int:
        return max(self.components, default=-1)

    def is_zero(self) -> bool:
        return not self.components

    def representative(self) -> polys.Poly:
        """Sum of the harmonic components (a polynomial representative)."""
        out: polys.Poly = {}
        for p in self.components.values():
            polys.add_into(out, p)
        return out

    def component(self, n: int) -> polys.Poly:
        return self.components.get(n, {})

    def _check(self, other: "Symbol") -> None:
        if self.d != other.d:
            raise DimensionError(f"symbols live in dimensions {self.d} and {other.d}")

    # -- linear structure
    def __add__(self, other: "Symbol") -> "Symbol":
        self._check(other)
        comps = {n: dict(p) for n, p in self.components.items()}
        for n, p in other.components.items():
            polys.add_into(comps.setdefault(n, {}), p)
        return Symbol(self.d, comps)

    def __neg__(self) -> "Symbol":
        return self.scale(-1)

    def __sub__(self, other: "Symbol") -> "Symbol":
        return self + (-other)

    def scale(self, c) -> "Symbol":
        c = GaussianRational.coerce(c)
        return Symbol(self.d, {n: polys.scale(p, c) for n, p in self.components.items()})

    def __mul__(self, other):
        if isinstance(other, Symbol):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def conj(self) -> "Symbol":
        return Symbol(self.d, {n: polys.conj(p) for n, p in self.components.items()})

    def map_components(self, fn) -> "Symbol":
        """Scale component ``n`` by ``fn(n)``."""
        out = {}
        for n, p in self.components.items():
            c = fn(n)
            if c:
                out[n] = polys.scale(p, c)
        return Symbol(self.d, out)

    def __eq__(self, other):
        if not isinstance(other, Symbol):
            return NotImplemented
        return self.d == other.d and self.components == other.components

    def __hash__(self):
        return hash((self.d, tuple(sorted((n, frozenset(p.items())) for n, p in self.components.items()))))

    def __repr__(self):
        terms = sum(len(p) for p in self.components.values())
        return f"Symbol(d={self.d}, degrees={sorted(self.components)}, terms={terms})"

    def is_real(self) -> bool:
        return self == self.conj()

    # -- numerics
    def reduced(self) -> polys.Poly:
        """Short representative, equal to ``f`` on the sphere (see :func:`polys.reduce_sphere`)."""
        if self._reduced is None:
            self._reduced = polys.reduce_sphere(self.representative())
        return self._reduced

    def compiled(self) -> polys.CompiledPoly:
        if self._compiled is None:
            self._compiled = polys.CompiledPoly(self.reduced(), self.d)
        return self._compiled

    def __call__(self, pts) -> np.ndarray:
        """Evaluate at points of ``C^d``, each normalized to the unit sphere first."""
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        return self.compiled()(pts)


def symbol_from_poly(d: int, raw: Mapping) -> Symbol:
    """Canonical symbol of the restriction of ``raw`` to the unit sphere."""
    p: polys.Poly = {}
    for (g, e), v in raw.items():
        g = tuple(int(a) for a in g)
        e = tuple(int(a) for a in e)
        if len(g) != d or len(e) != d:
            raise DimensionError(f"monomial {(g, e)} does not live in dimension {d}")
        if any(a < 0 for a in g + e):
            raise ValueError(f"negative exponent in {(g, e)}")
        if sum(g) != sum(e):
            raise InvalidSymbolError(f"unbalanced bidegree ({sum(g)}, {sum(e)}) in monomial {(g, e)}")
        polys.add_into(p, {(g, e): GaussianRational.coerce(v)})
    return Symbol(d, polys.restrict_to_sphere(p, d, 0))


def coordinate_symbol(d: int, i: int, j: int) -> Symbol:
    """Symbol of ``x_i conj(x_j)`` (0-based indices)."""
    g = tuple(1 if k == i else 0 for k in range(d))
    e = tuple(1 if k == j else 0 for k in range(d))
    return symbol_from_poly(d, {(g, e): 1})


def multiply(f: Symbol, g: Symbol) -> Symbol:
    f._check(g)
    return symbol_from_poly(f.d, polys.mul(f.representative(), g.representative()))


def laplace_eigenvalue(d: int, n: int) -> int:
    """Eigenvalue of the Laplacian on ``H_{n,n}``."""
    return -4 * n * (n + d - 1)


def laplacian(f: Symbol) -> Symbol:
    return f.map_components(lambda n: laplace_eigenvalue(f.d, n))


def apply_poly_of_laplacian(f: Symbol, coeffs: Sequence, variant: str = "minus_quarter") -> Symbol:
    """Apply ``sum_j coeffs[j] L^j`` with ``L = -Delta/4`` (default) or ``L = Delta``."""
    if variant not in ("minus_quarter", "laplacian"):
        raise ValueError(f"unknown scaling variant {variant!r}")
    cs = [rational(c) for c in coeffs]

    def factor(n):
        lam = n * (n + f.d - 1)
        if variant == "laplacian":
            lam = -4 * lam
        total = rational(0)
        for c in reversed(cs):
            total = total * lam + c
        return total

    return f.map_components(factor)


def inner_product(f: Symbol, g: Symbol) -> GaussianRational:
    """Exact ``int conj(f) g`` for the normalized measure."""
    f._check(g)
    total = G_ZERO
    for n, p in f.components.items():
        q = g.components.get(n)
        if q:
            total = total + polys.pairing(p, q)
    return total


def integral(f: Symbol) -> GaussianRational:
    comp = f.components.get(0)
    if not comp:
        return G_ZERO
    return next(iter(comp.values()))


def project_isotypic(f: Symbol, n: int) -> Symbol:
    return Symbol(f.d, {n: f.components[n]} if n in f.components else {})


def evaluate(f: Symbol, p) -> complex:
    """Value at the line through ``p`` (any nonzero vector of ``C^d``)."""
    return complex(f(np.asarray(p, dtype=complex)[None, :])[0])


def sample_cp(seed: int, count: int, d: int = 2) -> np.ndarray:
    """``count`` unit vectors in ``C^d``, uniform on the sphere, one per row."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_symbol(d: int, degree: int, rng: np.random.Generator, *, coeff_range: int = 3,
                  density: float = 0.6, real: bool = False) -> Symbol:
    """Seeded symbol with small Gaussian-integer coefficients on monomials up to ``degree``."""
    raw = {}
    for k in range(degree + 1):
        for g in multi_indices(d, k):
            for e in multi_indices(d, k):
                if rng.random() > density:
                    continue
                re = int(rng.integers(-coeff_range, coeff_range + 1))
                im = int(rng.integers(-coeff_range, coeff_range + 1))
                if re or im:
                    raw[(g, e)] = GaussianRational(re, im)
    f = symbol_from_poly(d, raw)
    if real:
        f = (f + f.conj()).scale(rational("1/2"))
    return f


# -- serialization

def symbol_to_json(f: Symbol) -> dict:
    terms = []
    for (g, e), v in sorted(f.representative().items()):
        terms.append({"gamma": list(g), "delta": list(e), "re": format_rational(v.re), "im": format_rational(v.im)})
    return {"d": f.d, "terms": terms}


def symbol_from_json(obj) -> Symbol:
    if isinstance(obj, str):
        obj = json.loads(obj)
    d = int(obj["d"])
    raw: Dict = {}
    for t in obj["terms"]:
        key = (tuple(t["gamma"]), tuple(t["delta"]))
        val = GaussianRational(rational(t.get("re", "0")), rational(t.get("im", "0")))
        raw[key] = raw.get(key, G_ZERO) + val
    return symbol_from_poly(d, raw)


def symbols_equal_on_sphere(f: Symbol, g: Symbol) -> bool:
    return f == g


def l2_norm_squared(f: Symbol) -> Rational:
    return inner_product(f, f).re


def power_integral(fs: Iterable[Symbol]) -> GaussianRational:
    """Exact integral of a product of symbols."""
    fs = list(fs)
    d = fs[0].d
    prod: polys.Poly = {((0,) * d, (0,) * d): GaussianRational(1)}
    for f in fs:
        prod = polys.mul(prod, f.representative())
    return polys.integrate(prod)
