"""Exact scalars, multi-indices and sphere integrals.

Everything here is exact: rationals are ``gmpy2.mpq`` (always reduced),
Gaussian rationals carry independent real and imaginary rationals, and
intervals have rational endpoints with outward rounding.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Sequence

from gmpy2 import mpq, mpz

Rational = type(mpq(0))

ZERO = mpq(0)
ONE = mpq(1)

FACTORIAL_CACHE_CAP = 512


class DimensionError(ValueError):
    """Raised when objects living over different ambient dimensions meet."""


def rational(value) -> Rational:
    """Coerce ints, strings ``"p/q"``, ``Fraction`` and ``mpq`` to ``mpq``."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, (int, Fraction)):
        return mpq(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        num, sep, den = text.partition("/")
        try:
            p = int(num)
            q = int(den) if sep else 1
        except ValueError as exc:
            raise ValueError(f"malformed rational literal {value!r}") from exc
        if q == 0:
            raise ZeroDivisionError(f"zero denominator in {value!r}")
        return mpq(p, q)
    if isinstance(value, float):
        raise TypeError("refusing to build an exact rational from a float")
    return mpq(value)


def format_rational(value) -> str:
    q = rational(value)
    return f"{q.numerator}/{q.denominator}"


class GaussianRational:
    """Exact element of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = rational(re)
        self.im = rational(im)

    @classmethod
    def _raw(cls, re, im) -> "GaussianRational":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            raise TypeError("refusing to build an exact scalar from a complex float")
        return cls._raw(rational(value), ZERO)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._raw(self.re, -self.im)

    def abs2(self) -> Rational:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im == 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __neg__(self):
        return GaussianRational._raw(-self.re, -self.im)

    def __add__(self, other):
        if isinstance(other, GaussianRational):
            return GaussianRational._raw(self.re + other.re, self.im + other.im)
        try:
            return GaussianRational._raw(self.re + rational(other), self.im)
        except TypeError:
            return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GaussianRational):
            return GaussianRational._raw(self.re - other.re, self.im - other.im)
        try:
            return GaussianRational._raw(self.re - rational(other), self.im)
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GaussianRational):
            a, b, c, e = self.re, self.im, other.re, other.im
            if not b and not e:
                return GaussianRational._raw(a * c, ZERO)
            return GaussianRational._raw(a * c - b * e, a * e + b * c)
        try:
            q = rational(other)
        except TypeError:
            return NotImplemented
        return GaussianRational._raw(self.re * q, self.im * q)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GaussianRational):
            n = other.abs2()
            if n == 0:
                raise ZeroDivisionError("division by zero Gaussian rational")
            return self * GaussianRational._raw(other.re / n, -other.im / n)
        q = rational(other)
        return GaussianRational._raw(self.re / q, self.im / q)

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return (GaussianRational._raw(ONE, ZERO) / self) ** (-k)
        result = GaussianRational._raw(ONE, ZERO)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, complex):
            return complex(self) == other
        try:
            return self.im == 0 and self.re == rational(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        if self.im == 0:
            return f"GaussianRational({format_rational(self.re)})"
        return f"GaussianRational({format_rational(self.re)}, {format_rational(self.im)})"

    def to_json(self) -> dict:
        return {"re": format_rational(self.re), "im": format_rational(self.im)}

    @classmethod
    def from_json(cls, obj) -> "GaussianRational":
        if isinstance(obj, dict):
            return cls(rational(obj.get("re", "0")), rational(obj.get("im", "0")))
        return cls(rational(obj))


G_ZERO = GaussianRational(0)
G_ONE = GaussianRational(1)
G_I = GaussianRational(0, 1)


# ---------------------------------------------------------------------------
# multi-indices and combinatorics

MultiIndex = tuple


def as_multi_index(entries: Iterable[int], d: int | None = None) -> tuple:
    alpha = tuple(int(a) for a in entries)
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative exponent in multi-index {alpha}")
    if d is not None and len(alpha) != d:
        raise DimensionError(f"multi-index {alpha} has length {len(alpha)}, expected {d}")
    return alpha


@lru_cache(maxsize=None)
def multi_indices(d: int, k: int) -> tuple:
    """All multi-indices of length ``d`` and total degree ``k``, in a fixed
    order (reverse lexicographic, so ``(k, 0, ..., 0)`` comes first)."""
    out = []
    for combo in combinations_with_replacement(range(d), k):
        alpha = [0] * d
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    out.sort(reverse=True)
    return tuple(out)


@lru_cache(maxsize=FACTORIAL_CACHE_CAP + 1)
def _cached_factorial(n: int) -> int:
    return math.factorial(n)


def factorial(n: int) -> int:
    if n < 0:
        raise ValueError("factorial of a negative integer")
    if n <= FACTORIAL_CACHE_CAP:
        return _cached_factorial(n)
    return math.factorial(n)


def multi_factorial(alpha: Sequence[int]) -> int:
    out = 1
    for a in alpha:
        out *= factorial(a)
    return out


def multinomial(alpha: Sequence[int]) -> int:
    return factorial(sum(alpha)) // multi_factorial(alpha)


def dim_sym(d: int, n: int) -> int:
    """Dimension of ``Sym^n(C^d)``, i.e. ``binom(n + d - 1, n)``."""
    if d < 1:
        raise ValueError("ambient dimension must be positive")
    if n < 0:
        raise ValueError("degree must be non-negative")
    return math.comb(n + d - 1, n)


def sphere_monomial_integral(gamma: Sequence[int], delta: Sequence[int]) -> Rational:
    """Normalized integral of ``x^gamma conj(x)^delta`` over ``S^{2d-1}``.

    Phase averaging kills every term with ``gamma != delta``; the diagonal
    value is ``(d-1)! gamma! / (d-1+|gamma|)!``.
    """
    if len(gamma) != len(delta):
        raise DimensionError(f"multi-index lengths differ: {len(gamma)} vs {len(delta)}")
    if tuple(gamma) != tuple(delta):
        return ZERO
    return _diag_integral(tuple(gamma))


@lru_cache(maxsize=1 << 16)
def _diag_integral(gamma: tuple) -> Rational:
    d = len(gamma)
    return mpq(factorial(d - 1) * multi_factorial(gamma), factorial(d - 1 + sum(gamma)))


def casimir_value(d: int, n: int, m: int) -> Rational:
    """Value of the quadratic Casimir on the irreducible ``H_{n,m}``."""
    return mpq(n * n + m * m) - mpq((n - m) ** 2, d) + (d - 1) * (n + m)


# ---------------------------------------------------------------------------
# intervals


def _floor_to_grid(q: Rational, bits: int) -> Rational:
    scaled = q * (mpz(1) << bits)
    return mpq(scaled.numerator // scaled.denominator, mpz(1) << bits)


def _ceil_to_grid(q: Rational, bits: int) -> Rational:
    scaled = q * (mpz(1) << bits)
    return mpq(-((-scaled.numerator) // scaled.denominator), mpz(1) << bits)


class Interval:
    """Closed interval ``[lo, hi]`` with rational endpoints.

    Arithmetic is exact on the endpoints, hence trivially outward; call
    :meth:`rounded` to snap endpoints outward onto a dyadic grid when the
    denominators get large.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = rational(lo)
        hi = lo if hi is None else rational(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def coerce(cls, value) -> "Interval":
        return value if isinstance(value, Interval) else cls(value)

    @property
    def width(self) -> Rational:
        return self.hi - self.lo

    @property
    def mid(self) -> Rational:
        return (self.lo + self.hi) / 2

    def is_exact(self) -> bool:
        return self.lo == self.hi

    def contains(self, value) -> bool:
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        if isinstance(value, float):
            return float(self.lo) <= value <= float(self.hi)
        return self.lo <= rational(value) <= self.hi

    def rounded(self, bits: int = 256) -> "Interval":
        return Interval(_floor_to_grid(self.lo, bits), _ceil_to_grid(self.hi, bits))

    def hull(self, other) -> "Interval":
        other = Interval.coerce(other)
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        other = Interval.coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        other = Interval.coerce(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return Interval.coerce(other) - self

    def __mul__(self, other):
        other = Interval.coerce(other)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Interval.coerce(other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("interval divisor contains zero")
        return self * Interval(1 / other.hi, 1 / other.lo)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative interval powers are not supported")
        if k == 0:
            return Interval(ONE)
        lo_k, hi_k = self.lo ** k, self.hi ** k
        if k % 2 == 0 and self.lo <= 0 <= self.hi:
            return Interval(ZERO, max(lo_k, hi_k))
        return Interval(min(lo_k, hi_k), max(lo_k, hi_k))

    def abs(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(ZERO, max(-self.lo, self.hi))

    def __le__(self, other):
        """Certainly less-or-equal: every point of self is <= every point of other."""
        return self.hi <= Interval.coerce(other).lo

    def __ge__(self, other):
        return Interval.coerce(other).hi <= self.lo

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Interval({format_rational(self.lo)}, {format_rational(self.hi)})"

    def to_json(self) -> dict:
        return {"lo": format_rational(self.lo), "hi": format_rational(self.hi)}


IntervalScalar = Interval


def iter_pairs(d: int, k: int) -> Iterator[tuple]:
    """All ``(gamma, delta)`` with ``|gamma| = |delta| = k`` in dimension ``d``."""
    idx = multi_indices(d, k)
    for g in idx:
        for e in idx:
            yield g, e
