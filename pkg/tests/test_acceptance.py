"""Exit criteria: each test runs one verification suite at its default grid,
checks the suite-specific conditions and the wall-clock budget, and logs a
PASS/FAIL line (printed again in the terminal summary)."""

import time

import pytest
from gmpy2 import mpq

from btquant import cli, liealg, quantize

pytestmark = pytest.mark.acceptance


def run_criterion(log, number, title, suite, budget, extra=None):
    start = time.perf_counter()
    code, report = cli.run_suite(suite)
    elapsed = time.perf_counter() - start
    summary = report["summary"]
    problems = []
    if code != 0 or summary["fail"]:
        failed = [c["params"] for c in report["cases"] if c["status"] == "fail"][:5]
        problems.append(f"{summary['fail']} failing cases, e.g. {failed}")
    if elapsed >= budget:
        problems.append(f"took {elapsed:.1f}s, budget {budget}s")
    if extra is not None:
        problems.extend(extra(report))
    verdict = "FAIL" if problems else "PASS"
    line = (f"[{verdict}] criterion {number:2d} {title}: {summary['cases']} cases "
            f"({summary['pass']} exact, {summary['non-exact-pass']} floating), {elapsed:.1f}s / {budget}s")
    if problems:
        line += " -- " + "; ".join(problems)
    print(line)
    log.append(line)
    assert not problems, line
    return report


def all_exact(report):
    return [] if all(c["exact"] for c in report["cases"]) else ["some verdicts were not exact"]


def test_criterion_01_exact_identities(acceptance_log):
    def extra(report):
        problems = all_exact(report)
        grid = {(c["params"]["d"], c["params"]["m"]) for c in report["cases"]}
        if grid != {(d, m) for d in (2, 3) for m in range(7)}:
            problems.append("grid does not cover d in {2,3}, m <= 6")
        return problems

    run_criterion(acceptance_log, 1, "Op[1]=1, Hus[1]=1, trace identities", "identities", 10, extra)


def test_criterion_02_berezin_spectrum(acceptance_log):
    def extra(report):
        problems = all_exact(report)
        if quantize.berezin_multiplier(2, 1, 1) != mpq(1, 3):
            problems.append("d=2, m=1, n=1 multiplier is not 1/3")
        hit = [c for c in report["cases"] if c["params"] == {"d": 2, "m": 1, "n": 1}]
        if not hit or hit[0]["details"]["multiplier"] != "1/3":
            problems.append("d=2, m=1, n=1 case missing from the report")
        return problems

    run_criterion(acceptance_log, 2, "Berezin multipliers on isotypes", "berezin-spectrum", 60, extra)


def test_criterion_03_op_hus_spectral(acceptance_log):
    run_criterion(acceptance_log, 3, "Op o Hus = Upsilon_m(Cas/2)", "oph", 60, all_exact)


def test_criterion_04_remainder_sign_and_domination(acceptance_log):
    def extra(report):
        problems = all_exact(report)
        seeds = {(c["params"]["d"], c["params"]["case"]) for c in report["cases"]}
        if len(seeds) != 100:
            problems.append(f"expected 50 symbols per dimension, got {len(seeds)}")
        return problems

    run_criterion(acceptance_log, 4, "(-1)^N E[f,fbar] psd and dominated", "thm2-hermitian", 300, extra)


def test_criterion_05_schatten_bound(acceptance_log):
    def extra(report):
        problems = []
        for c in report["cases"]:
            even = c["params"]["r"] == "2"
            if even != c["exact"]:
                problems.append(f"exactness flag wrong for {c['params']}")
                break
        return problems

    run_criterion(acceptance_log, 5, "Schatten bound (2,4,4) exact, (inf,inf,inf) tol 1e-9", "thm2-general", 120, extra)


def test_criterion_06_berezin_expansion(acceptance_log):
    def extra(report):
        problems = []
        for c in report["cases"]:
            p = c["params"]
            if p["N"] == 1 and p["p"] == "2" and not c["exact"]:
                problems.append(f"N=1, p=2 not exact: {p}")
            if p["N"] >= 2 and not c["details"]["upsilon_width"] < 1e-20:
                problems.append(f"upsilon interval too wide: {p}")
            if p["p"] == "inf" and c["exact"]:
                problems.append(f"sampled sup marked exact: {p}")
        cases = {c["params"]["case"] for c in report["cases"]}
        if len(cases) != 30:
            problems.append(f"expected 30 seeded symbols, got {len(cases)}")
        return problems[:5]

    run_criterion(acceptance_log, 6, "Berezin expansion in the Laplacian", "berezin-expansion", 120, extra)


def test_criterion_07_oph_expansion(acceptance_log):
    def extra(report):
        problems = []
        if {c["params"]["d"] for c in report["cases"]} != {2}:
            problems.append("expected d = 2 only")
        if len({c["params"]["case"] for c in report["cases"]}) != 30:
            problems.append("expected 30 seeded operators")
        if any(c["params"]["p"] == "inf" and c["exact"] for c in report["cases"]):
            problems.append("spectral norm marked exact")
        return problems

    run_criterion(acceptance_log, 7, "Op o Hus expansion in the Casimir", "oph-expansion", 60, extra)


def test_criterion_08_d_products(acceptance_log):
    run_criterion(acceptance_log, 8, "D_m products, two routes", "dm-products", 60, all_exact)


def test_criterion_09_interpolating_polynomials(acceptance_log):
    def extra(report):
        problems = all_exact(report)
        if max(c["params"]["n"] for c in report["cases"]) != 6:
            problems.append("n does not reach 6")
        if not all(c["checks"]["tight"] for c in report["cases"]):
            problems.append("tightness at mu_{m,n+1} not reached")
        return problems

    run_criterion(acceptance_log, 9, "interpolating polynomials q_mn", "interpolating", 10, extra)


def test_criterion_10_associativity(acceptance_log):
    def extra(report):
        problems = all_exact(report)
        if len(report["cases"]) != 40:
            problems.append("expected 20 triples per dimension")
        wanted = {"0", "1", "2", "5", "7"}
        if not all(wanted <= set(c["details"]["parameters"]) for c in report["cases"]):
            problems.append("parameters 0,1,2,5,7 not all checked")
        return problems

    run_criterion(acceptance_log, 10, "associativity of the star product", "associativity", 60, extra)


def test_criterion_11_upsilon_bounds(acceptance_log):
    run_criterion(acceptance_log, 11, "upsilon_mn <= m!/(m+n)!, monotone eigenvalues", "upsilon-bounds", 10,
                  all_exact)


def test_criterion_12_sharp_constant(acceptance_log):
    run_criterion(acceptance_log, 12, "sharp-constant sandwich at p=2", "constants", 30, all_exact)


def test_criterion_13_berezin_lieb_majorization(acceptance_log):
    start = time.perf_counter()

    def extra(report):
        problems = []
        fixtures = [c for c in report["cases"] if c["params"]["case"] == "exact-fixture"]
        if not fixtures or not all(c["exact"] for c in fixtures):
            problems.append("exact d=2 fixture missing")
        for c in report["cases"]:
            if c["params"]["case"] == "exact-fixture":
                continue
            if any(c["details"][key]["max_tolerance"] > 1e-3 + 1e-12 for key in ("op", "husimi", "weak")):
                problems.append(f"Monte Carlo slack above 1e-3: {c['params']}")
        # channel majorization |B_k(T)| <_w |T| at tol 1e-9, from the channel suite
        code, channels = cli.run_suite("channels")
        for c in channels["cases"]:
            checks = c["checks"]
            if "weak_singular_general" in checks and not (checks["weak_singular_general"]
                                                           and checks["weak_singular_hermitian"]):
                problems.append(f"channel majorization failed: {c['params']}")
        if time.perf_counter() - start >= 180:
            problems.append("over the 180s budget including channels")
        return problems[:5]

    run_criterion(acceptance_log, 13, "Berezin-Lieb and channel majorization", "berezin-lieb", 180, extra)


def test_criterion_14_choi_threshold(acceptance_log):
    def extra(report):
        problems = []
        for c in report["cases"]:
            if c["details"]["choi_min_eig"] < -1e-10:
                problems.append(f"Choi eigenvalue {c['details']['choi_min_eig']} at {c['params']}")
        maps = {(c["params"]["d"], c["params"]["m"], c["params"]["map"]) for c in report["cases"]}
        for d in (2, 3):
            for m in range(1, 4):
                if (d, m, "one_minus_cas_over_threshold") not in maps:
                    problems.append(f"threshold map missing at d={d}, m={m}")
        # exact confirmation on the smallest threshold cases
        for d, m in [(2, 1), (2, 2), (3, 1)]:
            if not liealg.choi_is_psd_exact(liealg.one_minus_cas_over(liealg.cp_threshold(d, m), d, m)):
                problems.append(f"exact Choi test failed at d={d}, m={m}")
        return problems[:5]

    run_criterion(acceptance_log, 14, "Choi positivity at the threshold", "channels", 30, extra)
