"""Verification suites: seeded case generation and per-case verdicts.

A suite turns a config into a list of tasks.  Each task is a small dict of
parameters that a worker process can run on its own; it returns one or more
case records.  A record carries the parameters, the named checks with their
boolean outcomes, whether every check was decided exactly, and free-form
details (interval endpoints, floating slacks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np
from gmpy2 import mpq

from . import asymptotics, liealg, majorization, quantize, sections, starprod, symbols
from .exactcore import GaussianRational, dim_sym, factorial, format_rational


class UnknownSuiteError(KeyError):
    """Raised for a suite name that is not registered."""


class ConfigError(ValueError):
    """Raised for a malformed suite configuration."""


def case_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for one case; depends only on the seed and the stream ids."""
    return np.random.default_rng([int(seed), *(int(s) for s in stream)])


def _record(params: dict, checks: Dict[str, bool], exact: bool, **details) -> dict:
    return {"params": params, "checks": {k: bool(v) for k, v in checks.items()}, "exact": bool(exact),
            "details": details}


def _real_symbol(d: int, degree: int, rng: np.random.Generator) -> symbols.Symbol:
    f = symbols.random_symbol(d, degree, rng)
    return (f + f.conj()).scale(mpq(1, 2))


# ---------------------------------------------------------------------------
# identities

def _identities_tasks(cfg):
    return [{"d": d, "m": m, "seed": cfg["seed"], "cases": cfg["cases"]} for d in cfg["d"] for m in cfg["m"]]


def _identities_run(t):
    d, m = t["d"], t["m"]
    dm = dim_sym(d, m)
    one = symbols.Symbol.constant(d, 1)
    ident = quantize.OperatorMatrix.identity(d, m)
    checks = {"op_one_is_identity": quantize.op_m(one, m) == ident,
              "hus_identity_is_one": quantize.hus_m(ident) == one}
    trace_ok = hus_ok = adj_ok = pos_ok = True
    for k in range(t["cases"]):
        rng = case_rng(t["seed"], d, m, k)
        f = symbols.random_symbol(d, 2, rng)
        T = quantize.random_operator(d, m, rng)
        trace_ok &= quantize.op_m(f, m).trace() == symbols.integral(f) * dm
        hus_ok &= symbols.integral(quantize.hus_m(T)) * dm == T.trace()
        adj_ok &= quantize.op_m(f.conj(), m) == quantize.op_m(f, m).adjoint()
        # |f|^2 is a non-negative symbol
        pos_ok &= quantize.is_psd(quantize.op_m(symbols.multiply(f, f.conj()), m))
    checks.update(trace_of_op=trace_ok, integral_of_hus=hus_ok, op_adjoint=adj_ok, op_positive=pos_ok)
    return [_record({"d": d, "m": m}, checks, True)]


# ---------------------------------------------------------------------------
# Berezin spectrum

def _closed_multiplier(d: int, m: int, n: int):
    if n > m:
        return mpq(0)
    return mpq(factorial(m) * factorial(m + d - 1), factorial(m - n) * factorial(m + d - 1 + n))


def _berezin_spectrum_tasks(cfg):
    return [{"d": d, "m": m, "seed": cfg["seed"]} for d in cfg["d"] for m in cfg["m"]]


def _berezin_spectrum_run(t):
    d, m = t["d"], t["m"]
    out = []
    for n in range(m + 1):
        rng = case_rng(t["seed"], d, m, n)
        h = symbols.project_isotypic(symbols.random_symbol(d, n, rng, density=1.0), n)
        lam = _closed_multiplier(d, m, n)
        checks = {"closed_form": quantize.berezin_multiplier(d, m, n) == lam,
                  "eigenfunction": quantize.ber_m(h, m) == h.scale(lam),
                  "nonzero_test_vector": not h.is_zero()}
        f = symbols.random_symbol(d, min(m + 1, 3), rng)
        checks["spectral_route"] = quantize.ber_m(f, m) == quantize.ber_m_spectral(f, m)
        out.append(_record({"d": d, "m": m, "n": n}, checks, True, multiplier=format_rational(lam)))
    return out


# ---------------------------------------------------------------------------
# Op o Hus as a spectral function of the Casimir

def _oph_tasks(cfg):
    return [{"d": d, "m": m} for d in cfg["d"] for m in cfg["m"]]


def _oph_run(t):
    d, m = t["d"], t["m"]
    direct = liealg.SuperOperator.from_map(d, m, quantize.op_hus_m)
    values = [asymptotics.upsilon_at_spectrum(d, m, liealg.half_cas_eigenvalue(d, n)) for n in range(m + 1)]
    spectral = liealg.spectral_function(d, m, values)
    return [_record({"d": d, "m": m}, {"superoperator_equal": direct == spectral}, True,
                    eigenvalues=[format_rational(v) for v in values])]


# ---------------------------------------------------------------------------
# remainder bounds for the product of Toeplitz operators

def _thm2_tasks(cfg):
    return [{"d": d, "k": k, "m": cfg["m"], "N": cfg["N"], "seed": cfg["seed"],
             "exponents": cfg.get("exponents"), "tol": cfg["tol"]}
            for d in cfg["d"] for k in range(cfg["cases"])]


def _thm2_symbols(t):
    rng = case_rng(t["seed"], t["d"], t["k"])
    return symbols.random_symbol(t["d"], 2, rng), symbols.random_symbol(t["d"], 2, rng)


def _thm2_hermitian_run(t):
    f, _ = _thm2_symbols(t)
    out = []
    for m in t["m"]:
        for N in t["N"]:
            r = starprod.check_thm2_hermitian(f, m, N)
            out.append(_record({"d": t["d"], "case": t["k"], "m": m, "N": N},
                               {"lower_psd": r["lower"], "upper_psd": r["upper"]}, True))
    return out


def _thm2_general_run(t):
    f, g = _thm2_symbols(t)
    out = []
    for m in t["m"]:
        for N in t["N"]:
            for r_, p_, q_ in t["exponents"]:
                r = starprod.check_thm2_general(f, g, m, N, r_, p_, q_, tol=t["tol"], seed=t["seed"])
                out.append(_record({"d": t["d"], "case": t["k"], "m": m, "N": N, "r": str(r_), "p": str(p_),
                                    "q": str(q_)}, {"schatten_bound": r["holds"]}, r["exact"],
                                   lhs=r["lhs"], rhs=r["rhs"]))
    return out


# ---------------------------------------------------------------------------
# asymptotic expansions

def _berezin_expansion_tasks(cfg):
    tasks = []
    for k in range(cfg["cases"]):
        d = cfg["d"][k % len(cfg["d"])]
        m = cfg["m"][(k // len(cfg["d"])) % len(cfg["m"])]
        tasks.append({"d": d, "m": m, "k": k, "N": cfg["N"], "p": cfg["p"], "K": cfg["K"], "seed": cfg["seed"],
                      "samples": cfg["samples"], "slack": cfg["slack"]})
    return tasks


def _berezin_expansion_run(t):
    rng = case_rng(t["seed"], t["k"])
    f = symbols.random_symbol(t["d"], 3, rng)
    out = []
    for N in t["N"]:
        for p in t["p"]:
            r = asymptotics.verify_berezin_expansion(f, t["m"], N, p, t["K"], seed=t["seed"] + t["k"],
                                                     samples=t["samples"], slack=t["slack"],
                                                     majorization=(p == "inf"))
            width = r["upsilon_width"]
            checks = {"norm_bound": r["holds"]}
            if N >= 2:
                checks["upsilon_width_below_1e-20"] = width < 1e-20
            out.append(_record({"d": t["d"], "m": t["m"], "case": t["k"], "N": N, "p": p}, checks, r["exact"],
                               lhs=r["lhs"], rhs=r["rhs"], upsilon_N=r["upsilon_N"], upsilon_width=width))
    return out


def _oph_expansion_tasks(cfg):
    return [{"d": cfg["d"][k % len(cfg["d"])], "m": cfg["m"][k % len(cfg["m"])], "k": k, "N": cfg["N"],
             "p": cfg["p"], "K": cfg["K"], "seed": cfg["seed"], "tol": cfg["tol"]} for k in range(cfg["cases"])]


def _oph_expansion_run(t):
    rng = case_rng(t["seed"], t["k"])
    T = quantize.random_operator(t["d"], t["m"], rng, hermitian=bool(t["k"] % 2))
    out = []
    for N in t["N"]:
        for p in t["p"]:
            r = asymptotics.verify_oph_expansion(T, t["m"], N, p, t["K"], tol=t["tol"],
                                                 majorization=(p == "inf"))
            out.append(_record({"d": t["d"], "m": t["m"], "case": t["k"], "N": N, "p": p},
                               {"norm_bound": r["holds"]}, r["exact"], lhs=r["lhs"], rhs=r["rhs"]))
    return out


# ---------------------------------------------------------------------------
# twisted sections and interpolating polynomials

def _dm_products_tasks(cfg):
    return [{"d": d, "m": m, "n_max": cfg["n_max"], "a_max": cfg["a_max"]} for d in cfg["d"] for m in cfg["m"]]


def _dm_products_run(t):
    r = sections.check_d_products(t["d"], t["m"], t["n_max"], t["a_max"])
    return [_record({"d": t["d"], "m": t["m"], "n_max": t["n_max"], "a_max": t["a_max"]},
                    {"two_routes_agree": r["pass"]}, True, sections_checked=r["cases"])]


def _interpolating_tasks(cfg):
    return [{"d": d, "m": m, "n": n, "per_gap": cfg["per_gap"]} for d in cfg["d"] for m in cfg["m"] for n in cfg["n"]]


def _interpolating_run(t):
    r = sections.check_interpolating_lemma(t["d"], t["m"], t["n"], t["per_gap"])
    keys = ("sum_of_products", "nonnegative", "upper", "interpolates", "telescoping", "tight")
    return [_record({"d": t["d"], "m": t["m"], "n": t["n"]}, {k: r[k] for k in keys}, True,
                    grid_points=r["grid_points"])]


# ---------------------------------------------------------------------------
# associativity

def _associativity_tasks(cfg):
    return [{"d": d, "k": k, "m": cfg["m"], "seed": cfg["seed"], "pin": cfg["pin"]}
            for d in cfg["d"] for k in range(cfg["triples"])]


def _associativity_run(t):
    rng = case_rng(t["seed"], t["d"], t["k"])
    f, g, h = (symbols.random_symbol(t["d"], 2, rng) for _ in range(3))
    r = starprod.check_associativity(f, g, h, t["m"], pin=t["pin"])
    checks = {"associator_zero": r["pass"]}
    if t["pin"]:
        checks["pinned"] = r["pinned"]
    return [_record({"d": t["d"], "case": t["k"]}, checks, True, parameters=sorted(r["results"]))]


# ---------------------------------------------------------------------------
# majorization

def _berezin_lieb_tasks(cfg):
    return [{"d": d, "m": m, "k": k, "seed": cfg["seed"], "samples": cfg["samples"]}
            for d in cfg["d"] for m in cfg["m"] for k in range(cfg["cases"])]


def _berezin_lieb_run(t):
    d, m, k = t["d"], t["m"], t["k"]
    rng = case_rng(t["seed"], d, m, k)
    f = _real_symbol(d, 2, rng)
    T = quantize.random_operator(d, m, rng, hermitian=True)
    seed = t["seed"] * 1000 + k
    first, second = majorization.check_berezin_lieb(f, m, t["samples"], seed=seed, T=T)
    S = quantize.random_operator(d, m, rng)
    weak = majorization.check_weak_berezin_lieb(S, t["samples"], seed=seed + 2)
    checks = {"op_eigenvalues_majorized_by_f": first.holds, "husimi_majorized_by_eigenvalues": second.holds,
              "weak_husimi_by_singular_values": weak.holds}
    details = {"op": first.to_json(), "husimi": second.to_json(), "weak": weak.to_json()}
    out = [_record({"d": d, "m": m, "case": k}, checks, False, **details)]
    if d == 2 and k == 0:
        h = _real_symbol(2, 1, rng)
        ex = majorization.exact_berezin_lieb_d2(h, m)
        out.append(_record({"d": 2, "m": m, "case": "exact-fixture"},
                           {"exact_majorization": ex["holds"], "equality_at_one": ex["equality_at_one"]}, True,
                           lam_sq=ex["lam_sq"]))
    return out


def _channels_tasks(cfg):
    return [{"d": d, "m": m, "seed": cfg["seed"], "tol": cfg["tol"], "choi_tol": cfg["choi_tol"],
             "extra_k": cfg["extra_k"]} for d in cfg["d"] for m in cfg["m"]]


def _channels_run(t):
    d, m = t["d"], t["m"]
    out = []
    alpha = liealg.cp_threshold(d, m)
    maps = [("one_minus_cas_over_threshold", liealg.one_minus_cas_over(alpha, d, m))] if m else []
    maps += [(f"generalized_ber_k{k}", liealg.generalized_ber(k, d, m)) for k in range(m, m + t["extra_k"] + 1)]
    rng = case_rng(t["seed"], d, m)
    H = quantize.random_operator(d, m, rng, hermitian=True)
    S = quantize.random_operator(d, m, rng)
    for name, Phi in maps:
        eig = liealg.choi_min_eig(Phi)
        checks = {"choi_min_eig_above_tol": eig >= -t["choi_tol"]}
        if name.startswith("generalized_ber"):
            rh = majorization.check_channel_majorization(Phi, H, t["tol"])
            rs = majorization.check_channel_majorization(Phi, S, t["tol"])
            checks.update(weak_singular_hermitian=rh.holds, signed_hermitian=rh.notes["signed_holds"],
                          weak_singular_general=rs.holds)
        out.append(_record({"d": d, "m": m, "map": name}, checks, False, choi_min_eig=eig,
                           alpha=format_rational(alpha)))
    return out


# ---------------------------------------------------------------------------
# upsilon coefficients and the sharp constant

def _upsilon_bounds_tasks(cfg):
    return [{"d": d, "m": m, "n_bound": cfg["n_bound"], "n_monotone": cfg["n_monotone"], "K": cfg["K"]}
            for d in cfg["d"] for m in cfg["m"]]


def _upsilon_bounds_run(t):
    d, m = t["d"], t["m"]
    bound_ok = True
    widths = []
    for n in range(t["n_bound"] + 1):
        u = asymptotics.upsilon(d, m, n, t["K"])
        bound_ok &= u.hi <= mpq(factorial(m), factorial(m + n))
        widths.append(float(u.width))
    mono = all(quantize.berezin_multiplier(d, m, n) <= quantize.berezin_multiplier(d, m + 1, n)
               for n in range(t["n_monotone"] + 1))
    return [_record({"d": d, "m": m}, {"upsilon_below_factorial_ratio": bound_ok, "eigenvalues_monotone": mono},
                    True, widths=widths)]


def _constants_tasks(cfg):
    return [{"d": d, "m": m, "N": N, "K": cfg["K"]} for d in cfg["d"] for m in cfg["m"] for N in cfg["N"]]


def _constants_run(t):
    r = asymptotics.optimal_constant_sandwich(t["d"], t["m"], t["N"], t["K"])
    return [_record({"d": t["d"], "m": t["m"], "N": t["N"]}, {"sandwich": r["holds"]}, True,
                    c=r["c"], lower=r["lower"], upsilon_N=r["upsilon_N"], cutoff=r["cutoff"])]


# ---------------------------------------------------------------------------
# registry

@dataclass(frozen=True)
class Suite:
    name: str
    anchor: str
    defaults: dict
    tasks: Callable[[dict], List[dict]]
    run: Callable[[dict], List[dict]]


def _r(a: int, b: int) -> List[int]:
    return list(range(a, b + 1))


SUITES: Dict[str, Suite] = {s.name: s for s in [
    Suite("identities", "Toeplitz and Husimi maps: unit, adjoint, positivity and trace identities",
          {"d": [2, 3], "m": _r(0, 6), "seed": 0, "cases": 2}, _identities_tasks, _identities_run),
    Suite("berezin-spectrum", "Berezin transform acts on each isotype by m!(m+d-1)!/((m-n)!(m+d-1+n)!)",
          {"d": [2, 3], "m": _r(0, 8), "seed": 1}, _berezin_spectrum_tasks, _berezin_spectrum_run),
    Suite("oph", "Op after Hus equals Upsilon_m of half the adjoint Casimir",
          {"d": [2, 3], "m": _r(0, 4)}, _oph_tasks, _oph_run),
    Suite("thm2-hermitian", "Toeplitz product remainder with fbar: sign and star_N domination",
          {"d": [2, 3], "m": _r(2, 8), "N": _r(1, 3), "cases": 50, "seed": 7, "tol": 1e-9},
          _thm2_tasks, _thm2_hermitian_run),
    Suite("thm2-general", "Toeplitz product remainder: Schatten bound with Hoelder exponents",
          {"d": [2, 3], "m": _r(2, 8), "N": _r(1, 3), "cases": 50, "seed": 7, "tol": 1e-9,
           "exponents": [[2, 4, 4], ["inf", "inf", "inf"]]}, _thm2_tasks, _thm2_general_run),
    Suite("berezin-expansion", "Berezin transform expansion in powers of the Laplacian",
          {"d": [2, 3], "m": [1, 2, 4, 8], "N": _r(1, 3), "p": ["2", "4", "inf"], "cases": 30, "seed": 11,
           "K": asymptotics.DEFAULT_K, "samples": 20000, "slack": 1e-6},
          _berezin_expansion_tasks, _berezin_expansion_run),
    Suite("oph-expansion", "Op after Hus expansion in powers of the adjoint Casimir",
          {"d": [2], "m": _r(1, 5), "N": _r(1, 3), "p": ["2", "inf"], "cases": 30, "seed": 13,
           "K": asymptotics.DEFAULT_K, "tol": 1e-9}, _oph_expansion_tasks, _oph_expansion_run),
    Suite("dm-products", "products of D_m shifted by its eigenvalues as xi sandwiches",
          {"d": [2, 3], "m": _r(0, 2), "n_max": 3, "a_max": 2}, _dm_products_tasks, _dm_products_run),
    Suite("interpolating", "interpolating polynomials q_mn: product formula and inequalities",
          {"d": [2, 3], "m": _r(0, 4), "n": _r(0, 6), "per_gap": 10}, _interpolating_tasks, _interpolating_run),
    Suite("associativity", "associativity of the formal star product on regular functions",
          {"d": [2, 3], "m": [0, 1, 2, 5, 7], "triples": 20, "seed": 42, "pin": True},
          _associativity_tasks, _associativity_run),
    Suite("berezin-lieb", "Berezin-Lieb majorization of Toeplitz spectra and Husimi functions",
          {"d": [2, 3], "m": [1, 2, 4], "cases": 2, "seed": 5, "samples": 100_000},
          _berezin_lieb_tasks, _berezin_lieb_run),
    Suite("channels", "complete positivity at the Casimir threshold and channel majorization",
          {"d": [2, 3], "m": _r(0, 3), "seed": 17, "tol": 1e-9, "choi_tol": 1e-10, "extra_k": 3},
          _channels_tasks, _channels_run),
    Suite("upsilon-bounds", "upsilon_mn below m!/(m+n)! and Berezin eigenvalues increasing in m",
          {"d": [2, 3], "m": _r(0, 20), "n_bound": 4, "n_monotone": 6, "K": asymptotics.DEFAULT_K},
          _upsilon_bounds_tasks, _upsilon_bounds_run),
    Suite("constants", "optimal constant of the L2 Berezin expansion between upsilon_mN(1-d/(N+m+1)) and upsilon_mN",
          {"d": [2, 3], "m": _r(0, 6), "N": [1, 2], "K": asymptotics.DEFAULT_K},
          _constants_tasks, _constants_run),
]}


def get_suite(name: str) -> Suite:
    try:
        return SUITES[name]
    except KeyError:
        raise UnknownSuiteError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None


def resolve_config(name: str, overrides: dict | None = None) -> dict:
    suite = get_suite(name)
    cfg = dict(suite.defaults)
    for k, v in (overrides or {}).items():
        if k not in cfg and k not in ("suite",):
            raise ConfigError(f"suite {name!r} has no parameter {k!r}")
        if isinstance(cfg.get(k), list) and not isinstance(v, list):
            v = [v]
        cfg[k] = v
    cfg.pop("suite", None)
    return cfg


def status_of(record: dict) -> str:
    if not all(record["checks"].values()):
        return "fail"
    return "pass" if record["exact"] else "non-exact-pass"


def run_task(name: str, task: dict) -> List[dict]:
    """Worker entry point: run one task and stamp suite, anchor and status on its records."""
    suite = get_suite(name)
    records = suite.run(task)
    for r in records:
        r["suite"] = name
        r["anchor"] = suite.anchor
        r["status"] = status_of(r)
    return records


def jsonable(obj):
    """Recursively convert exact scalars and numpy values into JSON-friendly ones."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, GaussianRational):
        return obj.to_json()
    if isinstance(obj, type(mpq(0))):
        return format_rational(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj
