"""Decreasing rearrangements, majorization verdicts and Berezin-Lieb checks.

Profiles are right-continuous step functions on ``[0, 1]``.  Partial
integrals of step functions are piecewise linear, so comparing them at the
merged breakpoint set decides majorization.  Profiles built from Monte Carlo
samples keep their sorted sample values so that a per-breakpoint standard
error can be attached to the partial integrals.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from gmpy2 import mpq

from .quantize import OperatorMatrix, op_m, hus_m
from .exactcore import dim_sym
from .symbols import Symbol, integral, sample_cp


class MassMismatchError(ValueError):
    """Raised when a strict comparison is asked of profiles with different total mass."""


@dataclass
class StepProfile:
    """Step function with value ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``."""

    breakpoints: np.ndarray
    values: np.ndarray
    samples: Optional[np.ndarray] = None  # sorted decreasing, when Monte Carlo
    centered: bool = False

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.breakpoints.shape[0] != self.values.shape[0] + 1:
            raise ValueError("need one more breakpoint than values")
        if abs(self.breakpoints[0]) > 1e-15 or abs(self.breakpoints[-1] - 1) > 1e-12:
            raise ValueError("profile must live on [0, 1]")
        if np.any(np.diff(self.breakpoints) < 0):
            raise ValueError("breakpoints must increase")
        if np.any(np.diff(self.values) > 1e-12 * max(1.0, float(np.max(np.abs(self.values), initial=0)))):
            raise ValueError("profile values must be non-increasing")

    def partial_integral(self, s) -> np.ndarray:
        """``int_0^s f*`` evaluated at the points ``s``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        widths = np.diff(self.breakpoints)
        cum = np.concatenate([[0.0], np.cumsum(widths * self.values)])
        idx = np.clip(np.searchsorted(self.breakpoints, s, side="right") - 1, 0, len(self.values) - 1)
        return cum[idx] + (s - self.breakpoints[idx]) * self.values[idx]

    def standard_error(self, s) -> np.ndarray:
        """Standard error of the sampled partial integral; zero for exact profiles.

        Writing ``int_0^s f* = s q + E[(X - q)^+]`` with ``q`` the level at
        ``s``, the estimator has variance ``Var((X - q)^+)/n``.  A profile
        recentred to its exact mean uses ``Var((X - q)^+ - s X)/n`` instead.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.samples is None:
            return np.zeros_like(s)
        x = self.samples - np.mean(self.samples)
        n = x.shape[0]
        S = np.concatenate([[0.0], np.cumsum(x)])
        Q = np.concatenate([[0.0], np.cumsum(x * x)])
        k = np.clip(np.ceil(s * n).astype(int) - 1, 0, n - 1)
        q = x[k]
        Sk, Qk = S[k], Q[k]
        t = s if self.centered else np.zeros_like(s)
        mean = (Sk - k * q) / n - t * S[n] / n
        second = (Qk - 2 * q * Sk + k * q * q - 2 * t * (Qk - q * Sk) + t * t * Q[n]) / n
        return np.sqrt(np.maximum(second - mean * mean, 0.0) / n)

    def total(self) -> float:
        return float(self.partial_integral([1.0])[0])

    def integrate(self, phi) -> float:
        return float(np.sum(np.diff(self.breakpoints) * phi(self.values)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("breakpoint,value\n")
        for b, v in zip(self.breakpoints[:-1], self.values):
            buf.write(f"{b!r},{v!r}\n")
        return buf.getvalue()


def _uniform_profile(values, samples: bool = False, mass=None) -> StepProfile:
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    raw = v.copy() if samples else None
    if mass is not None:
        v = v + (float(mass) - float(np.mean(v)))
    bp = np.linspace(0.0, 1.0, v.shape[0] + 1)
    return StepProfile(bp, v, raw, mass is not None)


def rearrange_eig_values(values) -> StepProfile:
    """Profile of a finite list of eigenvalues (or singular values), each of mass ``1/n``."""
    return _uniform_profile(values)


def rearrange_eigs(T: OperatorMatrix, absolute: bool = False) -> StepProfile:
    """Signed eigenvalue profile of a Hermitian operator, or singular-value profile."""
    A = T.orthonormal()
    if absolute:
        vals = np.linalg.svd(A, compute_uv=False)
    else:
        vals = np.linalg.eigvalsh((A + A.conj().T) / 2)
    return rearrange_eig_values(vals)


def rearrange_function(f, samples: int = 100_000, *, seed: int = 0, absolute: bool = False,
                       mass=None) -> StepProfile:
    """Empirical decreasing rearrangement from uniform samples of projective space.

    ``f`` may be a :class:`Symbol` or an array of already sampled values.
    When ``mass`` (the exact integral) is given, the profile is shifted to
    carry it exactly; this removes the sampling error at ``s = 1`` and
    shrinks it elsewhere.
    """
    if isinstance(f, Symbol):
        if samples < 1000:
            raise ValueError("rearrangements need at least 10^3 samples")
        vals = f(sample_cp(seed, samples, f.d))
    else:
        vals = np.asarray(f)
    if absolute:
        vals = np.abs(vals)
    elif np.iscomplexobj(vals):
        if np.max(np.abs(vals.imag), initial=0) > 1e-9 * max(1.0, float(np.max(np.abs(vals.real), initial=0))):
            raise ValueError("signed rearrangement of a complex-valued function")
        vals = vals.real
    return _uniform_profile(vals, samples=True, mass=mass)


@dataclass
class MajorizationReport:
    breakpoints: np.ndarray
    slack: np.ndarray
    tolerance: np.ndarray
    verdict: str
    equality_at_one: bool
    weak: bool = False
    notes: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        if self.weak:
            return self.verdict in ("majorized", "weakly-majorized")
        return self.verdict == "majorized"

    @property
    def min_slack(self) -> float:
        return float(np.min(self.slack + self.tolerance))

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "equality_at_one": self.equality_at_one, "weak": self.weak,
                "holds": self.holds, "min_raw_slack": float(np.min(self.slack)),
                "max_tolerance": float(np.max(self.tolerance)), "breakpoints": int(self.breakpoints.shape[0]),
                **self.notes}


def check_majorization(fstar: StepProfile, gstar: StepProfile, tol=1e-9, *, weak: bool = False,
                       monte_carlo: bool = False, sigmas: float = 5.0, cap: float = 1e-3) -> MajorizationReport:
    """Decide ``f* < g*`` (or the weak version) by partial integrals at merged breakpoints.

    With ``monte_carlo`` the tolerance at each breakpoint is
    ``min(cap, sigmas * combined standard error)``; otherwise ``tol``.
    """
    bp = np.union1d(fstar.breakpoints, gstar.breakpoints)
    slack = gstar.partial_integral(bp) - fstar.partial_integral(bp)
    if monte_carlo:
        se = np.sqrt(fstar.standard_error(bp) ** 2 + gstar.standard_error(bp) ** 2)
        tolerance = np.minimum(cap, sigmas * se) + 1e-12  # float rounding of the sums
        notes = {"five_sigma_max": float(np.max(sigmas * se)), "cap": cap}
    else:
        notes = {}
        tolerance = np.full(bp.shape, float(tol))
    inequality = bool(np.all(slack >= -tolerance))
    equal_end = bool(abs(slack[-1]) <= tolerance[-1])
    if not weak and not equal_end:
        raise MassMismatchError(f"total masses differ by {slack[-1]!r}")
    if inequality and equal_end:
        verdict = "majorized"
    elif inequality:
        verdict = "weakly-majorized"
    else:
        verdict = "neither"
    return MajorizationReport(bp, slack, tolerance, verdict, equal_end, weak, notes)


def check_berezin_lieb(f: Symbol, m: int, samples: int = 100_000, *, seed: int = 0,
                       T: OperatorMatrix | None = None, cap: float = 1e-3) -> tuple:
    """``Lambda(Op_m f) < f`` and ``Hus_m T < Lambda(T)`` with Monte Carlo slack."""
    if f != f.conj():
        raise ValueError("Berezin-Lieb check needs a real-valued symbol")
    op = op_m(f, m)
    fprof = rearrange_function(f, samples, seed=seed, mass=integral(f).re)
    first = check_majorization(rearrange_eigs(op), fprof, monte_carlo=True, cap=cap)
    T = op if T is None else T
    if not T.is_hermitian():
        raise ValueError("Husimi majorization needs a Hermitian operator")
    hprof = rearrange_function(hus_m(T), samples, seed=seed + 1, mass=T.trace().re / dim_sym(T.d, T.m))
    second = check_majorization(hprof, rearrange_eigs(T), monte_carlo=True, cap=cap)
    for rep in (first, second):
        rep.notes["samples"] = samples
    return first, second


def check_weak_berezin_lieb(T: OperatorMatrix, samples: int = 100_000, *, seed: int = 0,
                            cap: float = 1e-3) -> MajorizationReport:
    """``|Hus_m T| <_w`` singular-value profile of ``T`` for arbitrary ``T``."""
    hprof = rearrange_function(hus_m(T), samples, seed=seed, absolute=True)
    rep = check_majorization(hprof, rearrange_eigs(T, absolute=True), weak=True, monte_carlo=True, cap=cap)
    rep.notes["samples"] = samples
    return rep


def check_channel_majorization(Phi, T: OperatorMatrix, tol: float = 1e-9) -> MajorizationReport:
    """``|Phi(T)| <_w |T|`` by singular values; for Hermitian ``T`` also the signed
    eigenvalue majorization, recorded in the notes."""
    image = Phi.apply(T)
    rep = check_majorization(rearrange_eigs(image, absolute=True), rearrange_eigs(T, absolute=True),
                             tol, weak=True)
    if T.is_hermitian():
        signed = check_majorization(rearrange_eigs(image), rearrange_eigs(T), tol)
        rep.notes["signed_verdict"] = signed.verdict
        rep.notes["signed_holds"] = signed.holds
    return rep


def exact_berezin_lieb_d2(f: Symbol, m: int) -> dict:
    """Exact ``Lambda(Op_m f) < f`` for ``d = 2`` and ``f`` in ``H_00 + H_11``.

    Such ``f`` equals ``c + lam h0`` up to a rotation, with
    ``h0 = |x_1|^2 - |x_2|^2``.  Then ``f*(t) = c + lam (1 - 2t)`` and
    the eigenvalues of ``Op_m f`` are ``c + lam r_i`` where ``r_i`` are the
    (rational) eigenvalues of ``Op_m h0``.  Since ``int_0^s f*`` is concave
    and the eigenvalue partial sums are piecewise linear, comparing at the
    breakpoints ``k/d_m`` suffices, and ``lam > 0`` cancels.
    """
    from .symbols import symbol_from_poly

    if f.d != 2 or set(f.components) - {0, 1}:
        raise ValueError("exact fixture needs d = 2 and degree at most 1")
    if f != f.conj():
        raise ValueError("exact fixture needs a real symbol")
    h0 = symbol_from_poly(2, {((1, 0), (1, 0)): 1, ((0, 1), (0, 1)): -1})
    D = op_m(h0, m)
    r = sorted((D.re[i, i] for i in range(D.dim)), reverse=True)
    n = len(r)
    # the harmonic part is x^T A conj(x) with A traceless Hermitian; lam^2 = -det A
    h = f.components.get(1, {})
    lam_sq = mpq(0)
    if h:
        a11 = h.get(((1, 0), (1, 0)))
        a12 = h.get(((1, 0), (0, 1)))
        lam_sq = (a11.abs2() if a11 else 0) + (a12.abs2() if a12 else 0)
    # consistency: Tr(Op(h)^2) = lam^2 sum r_i^2
    if h:
        Oh = op_m(Symbol(2, {1: h}), m)
        if (Oh @ Oh).trace().re != lam_sq * sum(x * x for x in r):
            raise ArithmeticError("rotation reduction failed")
    checks = []
    partial = mpq(0)
    for k in range(1, n + 1):
        partial += r[k - 1]
        s = mpq(k, n)
        checks.append(partial / n <= s - s * s)
    return {"m": m, "lam_sq": str(lam_sq), "breakpoints": n, "holds": all(checks),
            "equality_at_one": partial == 0}


def karamata_gap(fstar: StepProfile, gstar: StepProfile, phi) -> float:
    """``int phi(g*) - int phi(f*)``; non-negative for convex ``phi`` when ``f* < g*``."""
    return gstar.integrate(phi) - fstar.integrate(phi)
