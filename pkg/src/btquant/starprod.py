"""Invariant bidifferential operators ``star_n`` and the Toeplitz product expansion.

``f star_n g`` is evaluated on polynomial representatives through

    sum_j (-1)^j C(n, j) sum_{|b| = n-j} ((n-j)!/b!) [(E')_j dbar^b f] [(E)_j d^b g]

where ``(E)_j`` is the falling factorial of the holomorphic Euler operator
and ``E'`` its antiholomorphic twin.  This is the expansion of
``prod_t (delta_{k_t l_t} - x_{l_t} xbar_{k_t}) dbar_k f d_l g`` after
symmetrizing the derivative tensors.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable

import numpy as np
from gmpy2 import mpq

from . import polys
from .exactcore import GaussianRational, Rational, dim_sym, factorial, multi_factorial, multi_indices, rational
from .quantize import OperatorMatrix, is_psd, op_m, schatten_power
from .symbols import Symbol, multiply, sample_cp, symbol_from_poly


class PoleError(ZeroDivisionError):
    """Raised when a star coefficient is evaluated at one of its poles."""


def star_coefficient(d: int, m, n: int) -> Rational:
    """``(-1)^n (m+d-1)! / (n! (n+m+d-1)!)``, extended to rational ``m``."""
    m = rational(m)
    den = mpq(factorial(n))
    for i in range(1, n + 1):
        t = m + d - 1 + i
        if t == 0:
            raise PoleError(f"star coefficient has a pole at m={m} (d={d}, n={n})")
        den *= t
    return (-1) ** n / den


def _falling(k: int, j: int) -> int:
    out = 1
    for i in range(j):
        out *= k - i
    return out


def _derive(p: polys.Poly, beta: tuple, anti: bool) -> polys.Poly:
    out: polys.Poly = {}
    for (g, e), v in p.items():
        exps = e if anti else g
        if any(a < b for a, b in zip(exps, beta)):
            continue
        c = 1
        for a, b in zip(exps, beta):
            c *= _falling(a, b)
        red = tuple(a - b for a, b in zip(exps, beta))
        key = (g, red) if anti else (red, e)
        polys.add_into(out, {key: v * c})
    return out


def _euler_falling(p: polys.Poly, j: int, anti: bool) -> polys.Poly:
    out: polys.Poly = {}
    for (g, e), v in p.items():
        c = _falling(sum(e) if anti else sum(g), j)
        if c:
            out[(g, e)] = v * c
    return out


def star_n_poly(fp: polys.Poly, gp: polys.Poly, d: int, n: int) -> polys.Poly:
    """``star_n`` on polynomial representatives (no canonicalization)."""
    acc: polys.Poly = {}
    for j in range(n + 1):
        k = n - j
        outer = (-1) ** j * math.comb(n, j)
        for beta in multi_indices(d, k):
            Df = _euler_falling(_derive(fp, beta, anti=True), j, anti=True)
            if not Df:
                continue
            Dg = _euler_falling(_derive(gp, beta, anti=False), j, anti=False)
            if not Dg:
                continue
            w = outer * (factorial(k) // multi_factorial(beta))
            polys.add_into(acc, polys.mul(Df, Dg), GaussianRational(w))
    return acc


def star_n(f: Symbol, g: Symbol, n: int) -> Symbol:
    f._check(g)
    if n < 0:
        raise ValueError("star_n needs n >= 0")
    return _star_n(f, g, n)


@lru_cache(maxsize=1024)
def _star_n(f: Symbol, g: Symbol, n: int) -> Symbol:
    if n == 0:
        return multiply(f, g)
    if n > min(f.degree, g.degree):
        return Symbol.zero(f.d)
    return symbol_from_poly(f.d, star_n_poly(f.representative(), g.representative(), f.d, n))


def star_truncated(f: Symbol, g: Symbol, m, N: int) -> Symbol:
    """``sum_{n<N} c(m, n) f star_n g``."""
    out = Symbol.zero(f.d)
    for n in range(N):
        c = star_coefficient(f.d, m, n)
        term = star_n(f, g, n)
        if not term.is_zero():
            out = out + term.scale(c)
    return out


def star_full(f: Symbol, g: Symbol, m) -> Symbol:
    """Full star product; the series terminates on regular functions."""
    return star_truncated(f, g, m, min(f.degree, g.degree) + 1 if not (f.is_zero() or g.is_zero()) else 1)


def remainder(f: Symbol, g: Symbol, m: int, N: int) -> OperatorMatrix:
    """``Op(f) Op(g) - sum_{n<N} c(m, n) Op(f star_n g)``."""
    f._check(g)
    if N < 0:
        raise ValueError("remainder needs N >= 0")
    return _remainder(f, g, m, N)


@lru_cache(maxsize=64)
def _remainder(f: Symbol, g: Symbol, m: int, N: int) -> OperatorMatrix:
    # built recursively so that a sweep over N reuses the lower orders
    if N == 0:
        return op_m(f, m) @ op_m(g, m)
    out = _remainder(f, g, m, N - 1)
    term = star_n(f, g, N - 1)
    if term.is_zero():
        return out
    return out - op_m(term, m).scale(star_coefficient(f.d, m, N - 1))


def remainder_bound_coefficient(d: int, m: int, N: int) -> Rational:
    """``(m+d-1)! / (N! (N+m+d-1)!)``, the absolute value of ``c(m, N)``."""
    return abs(star_coefficient(d, m, N))


def check_thm2_hermitian(f: Symbol, m: int, N: int, *, slack: bool = False) -> dict:
    """Exact verdicts for ``0 <= (-1)^N E[f, fbar] <= |c(m,N)| Op(f star_N fbar)``."""
    fb = f.conj()
    E = remainder(f, fb, m, N)
    signed = E if N % 2 == 0 else -E
    upper = op_m(star_n(f, fb, N), m).scale(remainder_bound_coefficient(f.d, m, N)) - signed
    report = {
        "d": f.d,
        "m": m,
        "N": N,
        "lower": is_psd(signed),
        "upper": is_psd(upper),
        "exact": True,
    }
    if slack:
        from .quantize import min_eigenvalue

        report["upper_slack_min_eig"] = min_eigenvalue(upper)
        report["lower_slack_min_eig"] = min_eigenvalue(signed)
    report["pass"] = report["lower"] and report["upper"]
    return report


@lru_cache(maxsize=1024)
def _power_integral(A: Symbol, p: int) -> Rational:
    """``int |A|^p`` for even ``p``, as the squared norm of ``A^{p/2}``."""
    if p % 2:
        raise ValueError("exact power integrals need an even exponent")
    rep = A.reduced()
    half = rep
    for _ in range(p // 2 - 1):
        half = polys.reduce_sphere(polys.mul(half, rep))
    return polys.pairing(half, half).re


@lru_cache(maxsize=1024)
def sup_norm_estimate(A: Symbol, seed: int = 0, samples: int = 5000, refine: int = 40) -> float:
    """Lower estimate of ``sup |A|`` by sampling and local refinement of the best points."""
    pts = sample_cp(seed, samples, A.d)
    vals = np.abs(A(pts))
    top = np.argsort(vals)[-8:]
    x, v = pts[top], vals[top]
    rng = np.random.default_rng(seed + 1)
    step = np.full(x.shape[0], 0.1)
    for _ in range(refine):
        noise = rng.standard_normal((x.shape[0], 16, A.d)) + 1j * rng.standard_normal((x.shape[0], 16, A.d))
        cand = x[:, None, :] + step[:, None, None] * noise
        cand /= np.linalg.norm(cand, axis=2, keepdims=True)
        cv = np.abs(A(cand.reshape(-1, A.d))).reshape(x.shape[0], 16)
        k = np.argmax(cv, axis=1)
        best = cv[np.arange(x.shape[0]), k]
        better = best > v
        x[better] = cand[better, k[better]]
        v = np.where(better, best, v)
        step = np.where(better, step, step * 0.6)
    return float(max(vals.max(), v.max()))


def check_thm2_general(f: Symbol, g: Symbol, m: int, N: int, r, p, q, *, tol: float = 1e-9,
                       seed: int = 0) -> dict:
    """Schatten bound on the remainder:
    ``||E||_r <= d_m^{1/r} |c(m,N)| ||f star_N fbar||_p^{1/2} ||gbar star_N g||_q^{1/2}``."""
    r, p, q = (math.inf if str(v) in ("inf", "oo") else v for v in (r, p, q))

    def inv(v):
        return mpq(0) if math.isinf(v) else mpq(1, int(v))

    if inv(r) != inv(p) + inv(q):
        raise ValueError(f"exponents do not satisfy 1/r = 1/p + 1/q: r={r}, p={p}, q={q}")
    d = f.d
    E = remainder(f, g, m, N)
    A = star_n(f, f.conj(), N)
    B = star_n(g.conj(), g, N)
    c = remainder_bound_coefficient(d, m, N)
    dm = dim_sym(d, m)
    report = {"d": d, "m": m, "N": N, "r": str(r), "p": str(p), "q": str(q)}
    all_even = not any(math.isinf(v) for v in (r, p, q)) and all(int(v) % 2 == 0 for v in (r, p, q))
    if all_even:
        r, p, q = int(r), int(p), int(q)
        lhs = schatten_power(E, r)  # ||E||_r^r
        Ap = _power_integral(A, p) if not A.is_zero() else mpq(0)
        Bq = _power_integral(B, q) if not B.is_zero() else mpq(0)
        # raise both sides of ||E||_r^r <= d_m c^r (Ap)^{r/2p} (Bq)^{r/2q} to the power 2pq
        M = 2 * p * q
        left = lhs ** M
        right = mpq(dm) ** M * c ** (r * M) * Ap ** (r * q) * Bq ** (r * p)
        report.update(exact=True, holds=bool(left <= right),
                      lhs=float(lhs) ** (1.0 / r),
                      rhs=float(dm) ** (1.0 / r) * float(c) * float(Ap) ** (0.5 / p) * float(Bq) ** (0.5 / q))
    else:
        from .quantize import schatten_norm_float

        lhs = schatten_norm_float(E, r)

        def lp(S, e):
            if S.is_zero():
                return 0.0
            if math.isinf(e):
                return sup_norm_estimate(S, seed=seed)
            return float(_power_integral(S, int(e))) ** (1.0 / e) if int(e) == e and int(e) % 2 == 0 else \
                float(np.mean(np.abs(S(sample_cp(seed, 20000, S.d))) ** e)) ** (1.0 / e)

        rfac = 1.0 if math.isinf(r) else float(dm) ** (1.0 / r)
        rhs = rfac * float(c) * lp(A, p) ** 0.5 * lp(B, q) ** 0.5
        report.update(exact=False, holds=bool(lhs <= rhs + tol), lhs=lhs, rhs=rhs, tol=tol)
    report["pass"] = report["holds"]
    return report


def associativity_points(f: Symbol, g: Symbol, h: Symbol) -> int:
    """Number of distinct parameters that pins the associator's rational coefficients."""
    K = max(min(f.degree, g.degree) + min(f.degree + g.degree, h.degree),
            min(g.degree, h.degree) + min(f.degree, g.degree + h.degree), 0)
    return 2 * K + 1


def associator(f: Symbol, g: Symbol, h: Symbol, m) -> Symbol:
    return star_full(star_full(f, g, m), h, m) - star_full(f, star_full(g, h, m), m)


def associator_terms(f: Symbol, g: Symbol, h: Symbol) -> dict:
    """``{(a, b): (f star_a g) star_b h - f star_b (g star_a h)}`` in sphere normal form.

    The associator at parameter ``m`` is ``sum c(m,a) c(m,b)`` times these
    terms.  They are computed once on raw representatives, which is legitimate
    because ``star_n_poly`` only sees the restriction of its inputs to the sphere.
    """
    f._check(g)
    f._check(h)
    d = f.d
    F, G, H = f.representative(), g.representative(), h.representative()

    def star(p, q, n):
        return polys.mul(p, q) if n == 0 else star_n_poly(p, q, d, n)

    top_a = max(min(f.degree, g.degree), min(g.degree, h.degree), 0)
    terms = {}
    for a in range(top_a + 1):
        left = polys.reduce_sphere(star(F, G, a)) if a <= min(f.degree, g.degree) else {}
        right = polys.reduce_sphere(star(G, H, a)) if a <= min(g.degree, h.degree) else {}
        top_b = max(min(f.degree + g.degree, h.degree), min(f.degree, g.degree + h.degree), 0)
        for b in range(top_b + 1):
            diff = star(left, H, b) if left else {}
            if right:
                diff = polys.sub(diff, star(F, right, b))
            diff = polys.reduce_sphere(diff)
            if diff:
                terms[(a, b)] = diff
    return terms


def _associator_from_terms(terms: dict, d: int, m) -> bool:
    acc: polys.Poly = {}
    for (a, b), p in terms.items():
        polys.add_into(acc, p, GaussianRational(star_coefficient(d, m, a) * star_coefficient(d, m, b)))
    return not acc


def check_associativity(f: Symbol, g: Symbol, h: Symbol, m_values: Iterable, *, pin: bool = True) -> dict:
    """Exact vanishing of ``(f*g)*h - f*(g*h)`` for each parameter, optionally at
    enough extra integer parameters to force the rational coefficients to vanish."""
    values = [rational(m) for m in m_values]
    terms = associator_terms(f, g, h)
    results = {}
    for m in values:
        results[str(m)] = _associator_from_terms(terms, f.d, m)
    pinned = False
    if pin:
        needed = associativity_points(f, g, h)
        cand = 0
        checked = set(values)
        while len(checked) < needed:
            mq = mpq(cand)
            if mq not in checked:
                checked.add(mq)
                results[str(mq)] = _associator_from_terms(terms, f.d, mq)
            cand += 1
        pinned = len(checked) >= needed
    ok = all(results.values())
    return {"d": f.d, "results": results, "pinned": pinned and ok, "pass": ok}
