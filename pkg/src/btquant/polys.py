"""Sparse polynomials in ``x`` and ``conj(x)`` with Gaussian-rational coefficients.

A polynomial is a plain ``dict`` mapping ``(gamma, delta)`` to a
``GaussianRational`` coefficient of ``x^gamma conj(x)^delta``.  Zero
coefficients are never stored.  This module is shared by the symbol and
section layers and is deliberately free of any notion of canonical form
beyond harmonic decomposition.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Callable, Dict, Iterable, Tuple

import numpy as np
from gmpy2 import fac, lcm, mpq, mpz

from .exactcore import DimensionError, GaussianRational, G_ZERO, sphere_monomial_integral

Key = Tuple[tuple, tuple]
Poly = Dict[Key, GaussianRational]


def clean(p: Poly) -> Poly:
    return {k: v for k, v in p.items() if v}


def add_into(acc: Poly, p: Poly, scale=None) -> None:
    """In-place ``acc += scale * p`` dropping cancelled terms."""
    for k, v in p.items():
        if scale is not None:
            v = v * scale
        cur = acc.get(k)
        new = v if cur is None else cur + v
        if new:
            acc[k] = new
        elif cur is not None:
            del acc[k]


def add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    add_into(out, q)
    return out


def sub(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    add_into(out, q, GaussianRational(-1))
    return out


def scale(p: Poly, c) -> Poly:
    c = GaussianRational.coerce(c)
    if not c:
        return {}
    return {k: v * c for k, v in p.items()}


def conj(p: Poly) -> Poly:
    """Complex conjugate: conjugate coefficients and swap holomorphic/antiholomorphic exponents."""
    return {(e, g): v.conjugate() for (g, e), v in p.items()}


def _addt(a: tuple, b: tuple) -> tuple:
    return tuple(i + j for i, j in zip(a, b))


def _integer_form(p: Poly):
    """Common denominator and Gaussian-integer numerators of the coefficients."""
    den = mpz(1)
    for v in p.values():
        den = lcm(den, lcm(v.re.denominator, v.im.denominator))
    return den, {k: (mpz(v.re * den), mpz(v.im * den)) for k, v in p.items()}


def mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return {}
    d = dimension(p)
    top = max(max(max(g + e) for g, e in p), 0) + max(max(max(g + e) for g, e in q), 0) + 1
    # exponents are packed into one integer so that multiplying monomials is one addition
    shifts = [top ** k for k in range(2 * d)]

    def pack(k):
        g, e = k
        return sum(a * s for a, s in zip(g + e, shifts))

    dp, pi = _integer_form(p)
    dq, qi = _integer_form(q)
    qs = [(pack(k), br, bi) for k, (br, bi) in qi.items()]
    acc: Dict[int, list] = {}
    for k, (ar, ai) in pi.items():
        c1 = pack(k)
        for c2, br, bi in qs:
            c = c1 + c2
            slot = acc.get(c)
            if slot is None:
                acc[c] = [ar * br - ai * bi, ar * bi + ai * br]
            else:
                slot[0] += ar * br - ai * bi
                slot[1] += ar * bi + ai * br
    den = dp * dq
    out: Poly = {}
    for c, (re, im) in acc.items():
        if re or im:
            exps = []
            for _ in range(2 * d):
                c, r = divmod(c, top)
                exps.append(r)
            out[(tuple(exps[:d]), tuple(exps[d:]))] = GaussianRational(mpq(re, den), mpq(im, den))
    return out


def dimension(p: Poly) -> int | None:
    for g, _ in p:
        return len(g)
    return None


def check_dimension(p: Poly, d: int) -> None:
    for g, e in p:
        if len(g) != d or len(e) != d:
            raise DimensionError(f"monomial {(g, e)} does not live in dimension {d}")


def bidegree_parts(p: Poly) -> Dict[Tuple[int, int], Poly]:
    parts: Dict[Tuple[int, int], Poly] = defaultdict(dict)
    for (g, e), v in p.items():
        parts[(sum(g), sum(e))][(g, e)] = v
    return dict(parts)


def laplace(p: Poly) -> Poly:
    """Apply ``L = sum_k d/dx_k d/dconj(x_k)``."""
    acc: Dict[Key, GaussianRational] = {}
    for (g, e), v in p.items():
        for k in range(len(g)):
            c = g[k] * e[k]
            if c:
                gk = g[:k] + (g[k] - 1,) + g[k + 1 :]
                ek = e[:k] + (e[k] - 1,) + e[k + 1 :]
                term = v * c
                cur = acc.get((gk, ek))
                acc[(gk, ek)] = term if cur is None else cur + term
    return clean(acc)


def mul_r2(p: Poly) -> Poly:
    """Multiply by ``|x|^2 = sum_k x_k conj(x_k)``."""
    acc: Dict[Key, GaussianRational] = {}
    for (g, e), v in p.items():
        for k in range(len(g)):
            gk = g[:k] + (g[k] + 1,) + g[k + 1 :]
            ek = e[:k] + (e[k] + 1,) + e[k + 1 :]
            cur = acc.get((gk, ek))
            acc[(gk, ek)] = v if cur is None else cur + v
    return clean(acc)


def mul_r2_power(p: Poly, j: int) -> Poly:
    for _ in range(j):
        p = mul_r2(p)
    return p


def harmonic_decompose(p: Poly, d: int) -> Dict[int, Poly]:
    """Split a bihomogeneous polynomial of bidegree ``(a, b)`` as
    ``sum_j |x|^{2j} h_j`` with each ``h_j`` harmonic of bidegree ``(a-j, b-j)``.

    Works top-down: ``L^j`` kills every summand below ``j`` and sends
    ``|x|^{2j} h`` to ``prod_{i<=j} i (i + d - 1 + a' + b') h``.
    Returns ``{j: h_j}`` without zero entries.
    """
    if not p:
        return {}
    degs = {(sum(g), sum(e)) for g, e in p}
    if len(degs) != 1:
        raise ValueError("harmonic_decompose expects a bihomogeneous polynomial")
    a, b = degs.pop()
    # peel on Gaussian-integer numerators; ``rest`` is the numerator over ``den``
    den, rest = _integer_form(p)
    out: Dict[int, Poly] = {}
    for j in range(min(a, b), -1, -1):
        if not rest:
            break
        h = rest
        for _ in range(j):
            h = _laplace_int(h)
        if not h:
            continue
        lap_deg = a - j + b - j
        c = 1
        for i in range(1, j + 1):
            c *= i * (i + d - 1 + lap_deg)
        hden = den * c
        out[j] = clean({k: GaussianRational(mpq(r, hden), mpq(s, hden)) for k, (r, s) in h.items()})
        # rest/den - r2^j h/(den c) = (c rest - r2^j h)/(den c)
        nxt = {k: (r * c, s * c) for k, (r, s) in rest.items()}
        for _ in range(j):
            h = _mul_r2_int(h)
        for k, (r, s) in h.items():
            r0, s0 = nxt.get(k, (0, 0))
            nxt[k] = (r0 - r, s0 - s)
        rest = {k: v for k, v in nxt.items() if v[0] or v[1]}
        den = hden
    if rest:
        raise ArithmeticError("harmonic peeling left a residue")
    return out


def _laplace_int(p: dict) -> dict:
    acc: dict = {}
    for (g, e), (r, s) in p.items():
        for k in range(len(g)):
            c = g[k] * e[k]
            if c:
                key = (g[:k] + (g[k] - 1,) + g[k + 1 :], e[:k] + (e[k] - 1,) + e[k + 1 :])
                r0, s0 = acc.get(key, (0, 0))
                acc[key] = (r0 + c * r, s0 + c * s)
    return {k: v for k, v in acc.items() if v[0] or v[1]}


def _mul_r2_int(p: dict) -> dict:
    acc: dict = {}
    for (g, e), (r, s) in p.items():
        for k in range(len(g)):
            key = (g[:k] + (g[k] + 1,) + g[k + 1 :], e[:k] + (e[k] + 1,) + e[k + 1 :])
            r0, s0 = acc.get(key, (0, 0))
            acc[key] = (r0 + r, s0 + s)
    return {k: v for k, v in acc.items() if v[0] or v[1]}


def restrict_to_sphere(p: Poly, d: int, offset: int = 0) -> Dict[int, Poly]:
    """Harmonic components of the restriction of ``p`` to the unit sphere.

    Every monomial must satisfy ``|delta| - |gamma| = offset``.  The result
    maps ``a`` (the holomorphic degree of the component) to a harmonic
    polynomial of bidegree ``(a, a + offset)``.
    """
    out: Dict[int, Poly] = {}
    for (a, b), part in bidegree_parts(p).items():
        if b - a != offset:
            raise ValueError(f"bidegree ({a}, {b}) does not have offset {offset}")
        for j, h in harmonic_decompose(part, d).items():
            slot = out.setdefault(a - j, {})
            add_into(slot, h)
    return {a: h for a, h in out.items() if h}


def integrate(p: Poly) -> GaussianRational:
    """Normalized sphere integral of a polynomial."""
    total = G_ZERO
    for (g, e), v in p.items():
        if g == e:
            total = total + v * sphere_monomial_integral(g, e)
    return total


def pairing(p: Poly, q: Poly) -> GaussianRational:
    """Sphere integral of ``conj(p) q`` without forming the product.

    Runs on integer numerators over a common denominator; the monomial
    integrals ``(d-1)! a!/(d-1+|a|)!`` share the denominator ``(d-1+top)!``.
    """
    if not p or not q:
        return G_ZERO
    d = dimension(p)
    dp, pi = _integer_form(p)
    dq, qi = _integer_form(q)
    by_diff: Dict[tuple, list] = defaultdict(list)
    for (g, e), v in qi.items():
        by_diff[tuple(a - b for a, b in zip(g, e))].append((g, v))
    top = max(sum(g) for g, _ in p) + max(sum(g) for g, _ in q)
    big = fac(d - 1 + top)
    fd = fac(d - 1)
    weights: Dict[tuple, mpz] = {}
    total_re = mpz(0)
    total_im = mpz(0)
    for (g1, e1), (ar, ai) in pi.items():
        # conj(x^g1 xb^e1) = x^e1 xb^g1; product is monomial with exponents (e1+g2, g1+e2)
        bucket = by_diff.get(tuple(b - a for a, b in zip(e1, g1)))
        if not bucket:
            continue
        for g2, (br, bi) in bucket:
            mono = _addt(e1, g2)
            w = weights.get(mono)
            if w is None:
                w = fd * big // fac(d - 1 + sum(mono))
                for a in mono:
                    w *= fac(a)
                weights[mono] = w
            total_re += (ar * br + ai * bi) * w
            total_im += (ar * bi - ai * br) * w
    scale = dp * dq * big
    return GaussianRational(mpq(total_re, scale), mpq(total_im, scale))


def reduce_sphere(p: Poly) -> Poly:
    """Normal form on the sphere: no monomial contains both ``x_d`` and ``conj(x_d)``.

    Uses ``x_d conj(x_d) = 1 - sum_{k<d} x_k conj(x_k)``; the result agrees
    with ``p`` on the unit sphere and usually has far fewer terms.
    """
    acc: Poly = {}
    todo = dict(p)
    while todo:
        nxt: Poly = {}
        for (g, e), v in todo.items():
            if g[-1] and e[-1]:
                g1 = g[:-1] + (g[-1] - 1,)
                e1 = e[:-1] + (e[-1] - 1,)
                add_into(nxt, {(g1, e1): v})
                for k in range(len(g) - 1):
                    gk = g1[:k] + (g1[k] + 1,) + g1[k + 1 :]
                    ek = e1[:k] + (e1[k] + 1,) + e1[k + 1 :]
                    add_into(nxt, {(gk, ek): -v})
            else:
                add_into(acc, {(g, e): v})
        todo = nxt
    return acc


def derivative(p: Poly, k: int, anti: bool = False) -> Poly:
    """Partial derivative in ``x_k`` (or ``conj(x_k)`` when ``anti``)."""
    acc: Poly = {}
    for (g, e), v in p.items():
        exps = e if anti else g
        c = exps[k]
        if not c:
            continue
        reduced = exps[:k] + (c - 1,) + exps[k + 1 :]
        key = (g, reduced) if anti else (reduced, e)
        add_into(acc, {key: v * c})
    return acc


def map_monomials(p: Poly, fn: Callable[[tuple, tuple], Iterable[Tuple[Key, object]]]) -> Poly:
    acc: Dict[Key, GaussianRational] = {}
    for (g, e), v in p.items():
        for key, c in fn(g, e):
            term = v * c
            cur = acc.get(key)
            acc[key] = term if cur is None else cur + term
    return clean(acc)


class CompiledPoly:
    """Floating-point evaluator for a polynomial, vectorized over points."""

    def __init__(self, p: Poly, d: int):
        keys = list(p.keys())
        self.d = d
        if keys:
            self.gam = np.array([k[0] for k in keys], dtype=np.int64)
            self.dlt = np.array([k[1] for k in keys], dtype=np.int64)
        else:
            self.gam = np.zeros((0, d), dtype=np.int64)
            self.dlt = np.zeros((0, d), dtype=np.int64)
        self.coef = np.array([complex(p[k]) for k in keys], dtype=complex)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        out = np.zeros(pts.shape[0], dtype=complex)
        if not self.coef.size:
            return out
        top = int(max(self.gam.max(), self.dlt.max()))
        # power tables, shape (d, points, top + 1)
        powers = pts.T[:, :, None] ** np.arange(top + 1)
        cpowers = np.conj(powers)
        step = max(1, 2_000_000 // pts.shape[0])
        for s in range(0, self.coef.size, step):
            gam = self.gam[s : s + step]
            dlt = self.dlt[s : s + step]
            mono = np.ones((pts.shape[0], gam.shape[0]), dtype=complex)
            for v in range(self.d):
                mono *= powers[v][:, gam[:, v]] * cpowers[v][:, dlt[:, v]]
            out += mono @ self.coef[s : s + step]
        return out
