"""Berezin multipliers, rigorous enclosures of the expansion coefficients, and
verification of the Berezin and ``Op o Hus`` expansions.

The coefficients are the elementary symmetric functions
``upsilon_n = e_n(a_1, a_2, ...)`` of ``a_k = 1/((m+k)(m+k+d-1))``.
Enclosures come from interval power sums: the head ``k <= K`` is summed
on a dyadic grid with outward rounding, the tail is split by partial
fractions (the first-order part telescopes exactly, higher orders are
Hurwitz-zeta tails bounded by Euler-Maclaurin with an explicit remainder),
and Newton's identities turn power sums into ``e_n``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence

import numpy as np
from gmpy2 import mpq, mpz

from . import polys
from .exactcore import Interval, Rational, factorial, format_rational, rational
from .quantize import OperatorMatrix, berezin_multiplier
from .symbols import Symbol, sample_cp

DEFAULT_K = 10_000
GRID_BITS = 256
EM_TERMS = 8


class SpectrumError(ValueError):
    """Raised when a value is not of the form ``n(n+d-1)``."""


def spectral_index(d: int, q) -> int:
    q = rational(q)
    if q < 0 or q.denominator != 1:
        raise SpectrumError(f"{q} is not a Laplace eigenvalue for d={d}")
    q = int(q)
    n = (math.isqrt((d - 1) ** 2 + 4 * q) - (d - 1)) // 2
    if n * (n + d - 1) != q:
        raise SpectrumError(f"{q} is not of the form n(n+{d - 1})")
    return n


def upsilon_at_spectrum(d: int, m: int, q) -> Rational:
    """``Upsilon_m(q)`` at ``q = n(n+d-1)``: exact Berezin eigenvalue."""
    return berezin_multiplier(d, m, spectral_index(d, q))


def upsilon_one(d: int, m: int) -> Rational:
    """Closed form ``(1/(d-1)) sum_{j<d} 1/(m+j)``."""
    return sum((mpq(1, m + j) for j in range(1, d)), mpq(0)) / (d - 1)


def _a(d: int, m: int, k: int) -> Rational:
    return mpq(1, (m + k) * (m + k + d - 1))


def _tail_first_order(d: int, m: int, K: int) -> Rational:
    """Exact ``sum_{k > K} a_k`` by telescoping."""
    return sum((mpq(1, m + K + j) for j in range(1, d)), mpq(0)) / (d - 1)


def upsilon_simple_bounds(d: int, m: int, n: int, K: int = DEFAULT_K) -> Interval:
    """Coarse enclosure ``[e_n(K), U_n]`` with ``U_n = e_n(K) + U_{n-1} T_K``.

    ``e_n(K)`` is the elementary symmetric function of the first ``K``
    terms; it is accumulated on a dyadic grid with outward rounding.
    """
    if K < n:
        raise ValueError(f"truncation K={K} must be at least n={n}")
    if n == 0:
        return Interval(1)
    lo, hi = _head_elementary(d, m, n, K)
    T = _tail_first_order(d, m, K)
    U = [Interval(1)]
    for j in range(1, n + 1):
        U.append(Interval(lo[j], hi[j] + U[j - 1].hi * T))
    return Interval(lo[n], U[n].hi)


@lru_cache(maxsize=None)
def _head_elementary(d: int, m: int, n: int, K: int):
    """Lower and upper bounds for ``e_j(a_1..a_K)``, ``j <= n``, on a dyadic grid."""
    scale = mpz(1) << GRID_BITS
    lo = [scale] + [mpz(0)] * n
    hi = [scale] + [mpz(0)] * n
    for k in range(1, K + 1):
        den = mpz((m + k) * (m + k + d - 1))
        for j in range(n, 0, -1):
            lo[j] += lo[j - 1] // den
            hi[j] += -((-hi[j - 1]) // den)
    return [mpq(v, scale) for v in lo], [mpq(v, scale) for v in hi]


@lru_cache(maxsize=None)
def _bernoulli(n: int) -> Fraction:
    """Bernoulli numbers with ``B_1 = -1/2``."""
    B = [Fraction(1)]
    for k in range(1, n + 1):
        B.append(-sum(math.comb(k + 1, j) * B[j] for j in range(k)) / (k + 1))
    return B[n]


def hurwitz_tail(s: int, a: int, P: int = EM_TERMS) -> Interval:
    """Enclosure of ``sum_{k>=0} (a+k)^{-s}`` for integers ``s >= 2``, ``a >= 1``.

    Euler-Maclaurin with ``P`` Bernoulli corrections; the remainder is at
    most ``2 zeta(2P)/(2 pi)^{2P} |f^{(2P-1)}(a)|`` and is bounded using
    ``2 zeta(2P) <= 4`` and ``pi >= 3``.
    """
    if s < 2 or a < 1:
        raise ValueError("hurwitz_tail needs s >= 2 and a >= 1")
    a = mpq(a)

    def deriv(r):
        # f^{(r)}(a) for f(x) = x^{-s}
        c = 1
        for i in range(r):
            c *= s + i
        return (-1) ** r * c / a ** (s + r)

    val = a ** (1 - s) / (s - 1) + a ** (-s) / 2
    for r in range(1, P + 1):
        b = _bernoulli(2 * r)
        val -= mpq(b.numerator, b.denominator) / factorial(2 * r) * deriv(2 * r - 1)
    err = 4 * abs(deriv(2 * P - 1)) / mpq(6) ** (2 * P)
    return Interval(val - err, val + err)


@lru_cache(maxsize=None)
def _partial_fractions(i: int, c: int):
    """``1/(u^i (u+c)^i) = sum_j A_j/u^j + B_j/(u+c)^j``; returns (A, B) lists indexed by j."""
    A = [mpq(0)] * (i + 1)
    B = [mpq(0)] * (i + 1)
    for j in range(1, i + 1):
        base = mpq(math.comb(2 * i - j - 1, i - j), c ** (2 * i - j))
        A[j] = (-1) ** (i - j) * base
        B[j] = (-1) ** i * base
    return A, B


def _tail_power_sum(d: int, m: int, i: int, K: int) -> Interval:
    """Enclosure of ``sum_{k > K} a_k^i``."""
    c = d - 1
    A, B = _partial_fractions(i, c)
    start = m + K + 1
    # first-order part telescopes since A_1 + B_1 = 0
    total = Interval(A[1] * sum((mpq(1, m + K + j) for j in range(1, c + 1)), mpq(0)))
    for j in range(2, i + 1):
        total = total + hurwitz_tail(j, start) * A[j] + hurwitz_tail(j, start + c) * B[j]
    return total


@lru_cache(maxsize=None)
def _power_sums(d: int, m: int, n: int, K: int) -> List[Interval]:
    scale = mpz(1) << GRID_BITS
    out = [Interval(0)]
    for i in range(1, n + 1):
        lo = mpz(0)
        hi = mpz(0)
        for k in range(1, K + 1):
            den = mpz((m + k) * (m + k + d - 1)) ** i
            q, r = divmod(scale, den)
            lo += q
            hi += q + (1 if r else 0)
        head = Interval(mpq(lo, scale), mpq(hi, scale))
        out.append((head + _tail_power_sum(d, m, i, K)).rounded(GRID_BITS))
    return out


@lru_cache(maxsize=None)
def upsilon(d: int, m: int, n: int, K: int = DEFAULT_K) -> Interval:
    """Rigorous enclosure of ``upsilon_{m,n}``; exact for ``n <= 1``."""
    if K < n:
        raise ValueError(f"truncation K={K} must be at least n={n}")
    if n == 0:
        return Interval(1)
    if n == 1:
        return Interval(upsilon_one(d, m))
    p = _power_sums(d, m, n, K)
    e = [Interval(1)]
    for j in range(1, n + 1):
        acc = Interval(0)
        for i in range(1, j + 1):
            term = e[j - i] * p[i]
            acc = acc + term if i % 2 else acc - term
        e.append((acc / j).rounded(GRID_BITS))
    tight = e[n]
    crude = upsilon_simple_bounds(d, m, n, K)
    lo, hi = max(tight.lo, crude.lo, mpq(0)), min(tight.hi, crude.hi)
    if lo > hi:
        raise ArithmeticError("inconsistent enclosures for the expansion coefficient")
    return Interval(lo, hi)


def upsilon_product_enclosure(d: int, m: int, q, K: int = 200) -> Interval:
    """``prod_{k<=K} (1 - q a_k)`` times a tail factor in ``[1 - q T_K, 1]``;
    valid when ``q a_k <= 1`` for ``k > K``."""
    q = rational(q)
    head = mpq(1)
    for k in range(1, K + 1):
        head *= 1 - q * _a(d, m, k)
    T = _tail_first_order(d, m, K)
    if q * _a(d, m, K + 1) > 1:
        raise ValueError("truncation too short for the tail-factor bound")
    lo_f = max(mpq(0), 1 - q * T)
    ends = (head * lo_f, head)
    return Interval(min(ends), max(ends))


def upsilon_series_interval(d: int, m: int, z, order: int, K: int = DEFAULT_K) -> Interval:
    """``sum_{n<=order} upsilon_n (-z)^n`` with a rigorous bound on the omitted tail."""
    z = rational(z)
    total = Interval(0)
    for n in range(order + 1):
        total = total + upsilon(d, m, n, K) * ((-z) ** n)
    # e_n <= p_1^n / n!, so the tail is at most sum_{n>order} (p_1 |z|)^n / n!
    x = upsilon_one(d, m) * abs(z)
    term = x ** (order + 1) / factorial(order + 1)
    tail = mpq(0)
    n = order + 1
    while True:
        tail += term
        n += 1
        nxt = term * x / n
        if nxt < mpq(1, 10 ** 40) and x / n < mpq(1, 2):
            tail += 2 * nxt
            break
        term = nxt
    return Interval(total.lo - tail, total.hi + tail)


# ---------------------------------------------------------------------------
# verification of the function-side expansion

def _remainder_coefficients(d: int, m: int, N: int, degrees: Sequence[int], K: int) -> Dict[int, Interval]:
    ups = [upsilon(d, m, n, K) for n in range(N)]
    out = {}
    for j in degrees:
        q = j * (j + d - 1)
        acc = Interval(berezin_multiplier(d, m, j))
        for n, u in enumerate(ups):
            acc = acc - u * ((-q) ** n)
        out[j] = acc
    return out


def _l4_tensor(comps: Dict[int, polys.Poly]) -> Dict[tuple, Rational]:
    """Real parts of ``int h_a conj(h_b) h_c conj(h_e)`` for all component tuples."""
    keys = sorted(comps)
    pair = {}
    for a in keys:
        for b in keys:
            pair[(a, b)] = polys.mul(comps[a], polys.conj(comps[b]))
    out = {}
    for a in keys:
        for b in keys:
            cab = polys.conj(pair[(a, b)])
            for c in keys:
                for e in keys:
                    out[(a, b, c, e)] = polys.pairing(cab, pair[(c, e)]).re
    return out


def _fourth_power(tensor: Dict[tuple, Rational], coeffs: Dict[int, Interval]) -> Interval:
    total = Interval(0)
    for (a, b, c, e), t in tensor.items():
        if t:
            total = total + coeffs[a] * coeffs[b] * coeffs[c] * coeffs[e] * t
    return Interval(max(total.lo, mpq(0)), max(total.hi, mpq(0)))


def _sampled_sup(values_fn, d: int, seed: int, samples: int) -> float:
    pts = sample_cp(seed, samples, d)
    return float(np.max(np.abs(values_fn(pts))))


def verify_berezin_expansion(f: Symbol, m: int, N: int, p, K: int = DEFAULT_K, *, seed: int = 0,
                             samples: int = 20000, slack: float = 1e-6, majorization: bool = False) -> dict:
    """Check ``||Ber_m f - sum_{n<N} upsilon_n (Delta/4)^n f||_p <= upsilon_N ||(Delta/4)^N f||_p``."""
    p_str = str(p)
    if p_str not in ("2", "4", "inf"):
        raise ValueError(f"unsupported exponent p={p}")
    d = f.d
    degrees = sorted(f.components)
    r = _remainder_coefficients(d, m, N, degrees, K)
    uN = upsilon(d, m, N, K)
    lap = {j: mpq(j * (j + d - 1)) ** N for j in degrees}
    report = {"d": d, "m": m, "N": N, "p": p_str, "K": K,
              "upsilon_N": uN.to_json(), "upsilon_width": float(uN.width)}
    if p_str == "2":
        norms = {j: polys.pairing(f.components[j], f.components[j]).re for j in degrees}
        lhs = Interval(0)
        for j in degrees:
            lhs = lhs + (r[j] ** 2) * norms[j]
        rhs_sq = sum((lap[j] ** 2 * norms[j] for j in degrees), mpq(0))
        holds = lhs.hi <= uN.lo ** 2 * rhs_sq
        report.update(exact=lhs.is_exact() and uN.is_exact(), holds=bool(holds),
                      lhs=math.sqrt(float(lhs.hi)), rhs=float(uN.hi) * math.sqrt(float(rhs_sq)))
    elif p_str == "4":
        tensor = _l4_tensor(f.components)
        lhs = _fourth_power(tensor, r)
        rhs4 = _fourth_power(tensor, {j: Interval(lap[j]) for j in degrees}).lo
        holds = lhs.hi <= uN.lo ** 4 * rhs4
        report.update(exact=lhs.is_exact() and uN.is_exact(), holds=bool(holds),
                      lhs=float(lhs.hi) ** 0.25, rhs=float(uN.hi) * float(rhs4) ** 0.25)
    else:
        from .starprod import sup_norm_estimate

        R = f.map_components(lambda j: r[j].mid)
        D = f.map_components(lambda j: lap[j])
        lhs = sup_norm_estimate(R, seed=seed, samples=samples) if not R.is_zero() else 0.0
        rhs = float(uN.hi) * sup_norm_estimate(D, seed=seed, samples=samples) if not D.is_zero() else 0.0
        report.update(exact=False, holds=bool(lhs <= rhs + slack), lhs=lhs, rhs=rhs, slack=slack)
    if majorization:
        from .majorization import check_majorization, rearrange_function

        pts = sample_cp(seed + 7, samples, d)
        R = f.map_components(lambda j: r[j].mid)
        D = f.map_components(lambda j: lap[j])
        Rs = rearrange_function(np.abs(R(pts)))
        Ds = rearrange_function(float(uN.hi) * np.abs(D(pts)))
        report["majorization"] = check_majorization(Rs, Ds, weak=True, monte_carlo=True).to_json()
        report["holds"] = report["holds"] and report["majorization"]["holds"]
    report["pass"] = report["holds"]
    return report


# ---------------------------------------------------------------------------
# verification of the operator-side expansion

def verify_oph_expansion(T: OperatorMatrix, m: int, N: int, p, K: int = DEFAULT_K, *, tol: float = 1e-9,
                         majorization: bool = False) -> dict:
    """Check ``||Op Hus T - sum_{n<N} upsilon_n (-Cas/2)^n T||_p <= upsilon_N ||(Cas/2)^N T||_p``."""
    from .liealg import isotypic_projector_ops

    p_str = str(p)
    if p_str not in ("2", "inf"):
        raise ValueError(f"unsupported exponent p={p}")
    if T.m != m:
        raise ValueError("operator degree does not match m")
    d = T.d
    parts = {n: isotypic_projector_ops(d, m, n).apply(T) for n in range(m + 1)}
    parts = {n: P for n, P in parts.items() if not P.is_zero()}
    r = _remainder_coefficients(d, m, N, sorted(parts), K)
    uN = upsilon(d, m, N, K)
    lap = {n: mpq(n * (n + d - 1)) ** N for n in parts}
    report = {"d": d, "m": m, "N": N, "p": p_str, "K": K, "upsilon_N": uN.to_json()}
    if p_str == "2":
        norms = {n: (P.adjoint() @ P).trace().re for n, P in parts.items()}
        lhs = Interval(0)
        for n in parts:
            lhs = lhs + (r[n] ** 2) * norms[n]
        rhs_sq = sum((lap[n] ** 2 * norms[n] for n in parts), mpq(0))
        holds = lhs.hi <= uN.lo ** 2 * rhs_sq
        report.update(exact=lhs.is_exact() and uN.is_exact(), holds=bool(holds),
                      lhs=math.sqrt(float(lhs.hi)), rhs=float(uN.hi) * math.sqrt(float(rhs_sq)))
    else:
        R = sum((parts[n].orthonormal() * float(r[n].mid) for n in parts), np.zeros((T.dim, T.dim)))
        D = sum((parts[n].orthonormal() * float(lap[n]) for n in parts), np.zeros((T.dim, T.dim)))
        lhs = float(np.linalg.norm(R, 2)) if parts else 0.0
        rhs = float(uN.hi) * float(np.linalg.norm(D, 2)) if parts else 0.0
        report.update(exact=False, holds=bool(lhs <= rhs + tol), lhs=lhs, rhs=rhs, tol=tol)
    if majorization and T.is_hermitian():
        from .majorization import check_majorization, rearrange_eig_values

        R = sum((parts[n].orthonormal() * float(r[n].mid) for n in parts), np.zeros((T.dim, T.dim)))
        D = sum((parts[n].orthonormal() * float(uN.hi * lap[n]) for n in parts), np.zeros((T.dim, T.dim)))
        sv_r = np.linalg.svd(R, compute_uv=False)
        sv_d = np.linalg.svd(D, compute_uv=False)
        rep = check_majorization(rearrange_eig_values(sv_r), rearrange_eig_values(sv_d), tol=tol, weak=True)
        report["majorization"] = rep.to_json()
        report["holds"] = report["holds"] and rep.holds
    report["pass"] = report["holds"]
    return report


# ---------------------------------------------------------------------------
# sharp constant

def optimal_constant_sandwich(d: int, m: int, N: int, K: int = DEFAULT_K, max_terms: int = 100000) -> dict:
    """Enclose ``c = sup_n |Upsilon_m(q_n) - sum_{j<N} upsilon_j (-q_n)^j| / q_n^N`` and
    compare with ``upsilon_N (1 - d/(N+m+1)) <= c <= upsilon_N``."""
    ups = [upsilon(d, m, j, K) for j in range(N + 1)]
    head_sum = sum((u.hi for u in ups[:N]), mpq(0))
    best = None
    ratios = []
    cutoff = None
    n = 1
    while n <= max_terms:
        q = mpq(n * (n + d - 1))
        acc = Interval(berezin_multiplier(d, m, n))
        for j in range(N):
            acc = acc - ups[j] * ((-q) ** j)
        ratio = acc.abs() / (q ** N)
        ratios.append(ratio)
        best = ratio if best is None else Interval(max(best.lo, ratio.lo), max(best.hi, ratio.hi))
        # for n > m the ratio is at most (sum_{j<N} upsilon_j)/q, and q >= 1
        if n > m and head_sum / q < best.lo:
            cutoff = n
            break
        n += 1
    if cutoff is None:
        raise ArithmeticError("supremum cutoff not reached")
    lower = ups[N] * (1 - mpq(d, N + m + 1))
    holds = lower.hi <= best.lo and best.hi <= ups[N].lo
    tail_monotone = all(ratios[i].lo >= ratios[i + 1].hi for i in range(m + N, len(ratios) - 1))
    return {"d": d, "m": m, "N": N, "c": best.to_json(), "c_float": float(best.mid),
            "upsilon_N": ups[N].to_json(), "lower": lower.to_json(), "cutoff": cutoff,
            "tail_monotone": tail_monotone, "holds": bool(holds), "pass": bool(holds)}


def upsilon_report(d: int, m: int, n_max: int, K: int = DEFAULT_K) -> dict:
    vals = [upsilon(d, m, n, K) for n in range(n_max + 1)]
    return {"d": d, "m": m, "K": K,
            "values": [{"n": n, "lo": format_rational(v.lo), "hi": format_rational(v.hi),
                        "width": float(v.width), "approx": float(v.mid)} for n, v in enumerate(vals)]}
