"""Command-line harness: run verification suites and thin quantization tools.

    btquant run --suite associativity --d 2,3 --m 0,1,2,5,7 --seed 42 --out report.json
    btquant quantize symbol.json --m 3 --out op.json
    btquant husimi op.json --out hus.json
    btquant spectrum op.json
    btquant upsilon --d 2 --m 1 --n 1 --K 1000

Exit codes: 0 when every case passes, 1 when a check fails, 2 for usage,
parse or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from typing import List, Sequence

import numpy as np

from . import __version__, asymptotics, quantize, suites, symbols
from .exactcore import format_rational

SCHEMA_VERSION = 1
EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad command-line input; reported with exit code 2."""


def parse_int_list(text: str) -> List[int]:
    """``"3"``, ``"2,3"`` or ``"2..8"`` (inclusive) to a list of ints."""
    out: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError(f"empty list {text!r}")
    return out


def load_json(path: str):
    """Read a JSON document, turning decoding errors into line/column diagnostics."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# suites

def run_suite(name: str, config: dict | None = None, *, workers: int = 1) -> tuple:
    """Run a suite and return ``(exit_code, report)``."""
    suite = suites.get_suite(name)
    cfg = suites.resolve_config(name, config)
    tasks = suite.tasks(cfg)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(suites.run_task, [name] * len(tasks), tasks))
    else:
        chunks = [suites.run_task(name, t) for t in tasks]
    cases = [r for chunk in chunks for r in chunk]
    counts = {s: sum(1 for c in cases if c["status"] == s) for s in ("pass", "non-exact-pass", "fail")}
    report = {
        "schema": SCHEMA_VERSION,
        "header": {"generated": datetime.now(timezone.utc).isoformat(timespec="seconds"), "version": __version__},
        "suite": name,
        "anchor": suite.anchor,
        "config": cfg,
        "summary": {"cases": len(cases), **counts},
        "cases": cases,
    }
    code = EXIT_FAIL if counts["fail"] else EXIT_PASS
    return code, suites.jsonable(report)


def _overrides(args) -> dict:
    cfg = load_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    for flag in ("d", "m", "N"):
        value = getattr(args, flag)
        if value is not None:
            cfg[flag] = value
    if args.p is not None:
        cfg["p"] = args.p.split(",")
    for flag in ("seed", "samples", "K", "tol"):
        value = getattr(args, flag)
        if value is not None:
            cfg[flag] = value
    return cfg


def _cmd_run(args) -> int:
    name = args.suite
    cfg = _overrides(args)
    if name is None:
        name = cfg.pop("suite", None)
    if name is None:
        raise UsageError("no suite given (use --suite or a 'suite' field in the config)")
    try:
        code, report = run_suite(name, cfg, workers=args.workers)
    except (suites.UnknownSuiteError, suites.ConfigError) as exc:
        raise UsageError(str(exc.args[0] if exc.args else exc)) from None
    write_json(report, args.out)
    s = report["summary"]
    print(f"{name}: {s['cases']} cases, {s['pass']} pass, {s['non-exact-pass']} non-exact-pass, "
          f"{s['fail']} fail", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# tools

def _read_symbol(path: str) -> symbols.Symbol:
    try:
        return symbols.symbol_from_json(load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: not a symbol file ({exc})") from None


def _read_matrix(path: str) -> quantize.OperatorMatrix:
    try:
        return quantize.matrix_from_json(load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: not a matrix file ({exc})") from None


def _cmd_quantize(args) -> int:
    f = _read_symbol(args.symbol)
    write_json(quantize.matrix_to_json(quantize.op_m(f, args.m)), args.out)
    return EXIT_PASS


def _cmd_husimi(args) -> int:
    T = _read_matrix(args.matrix)
    write_json(symbols.symbol_to_json(quantize.hus_m(T)), args.out)
    return EXIT_PASS


def _cmd_spectrum(args) -> int:
    T = _read_matrix(args.matrix)
    A = T.orthonormal()
    if T.is_hermitian():
        values = sorted(np.linalg.eigvalsh((A + A.conj().T) / 2).tolist(), reverse=True)
        kind = "eigenvalues"
    else:
        values = np.linalg.svd(A, compute_uv=False).tolist()
        kind = "singular-values"
    write_json({"d": T.d, "m": T.m, "kind": kind, "values": values, "trace": T.trace().to_json()}, args.out)
    return EXIT_PASS


def _cmd_upsilon(args) -> int:
    u = asymptotics.upsilon(args.d, args.m, args.n, args.K)
    write_json({"d": args.d, "m": args.m, "n": args.n, "K": args.K, "lo": format_rational(u.lo),
                "hi": format_rational(u.hi), "width": float(u.width), "approx": float(u.mid)}, args.out)
    return EXIT_PASS


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btquant", description="Berezin-Toeplitz quantization checks")
    parser.add_argument("--version", action="version", version=f"btquant {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a verification suite")
    run.add_argument("--suite", choices=sorted(suites.SUITES))
    run.add_argument("--config", help="JSON config; flags override its fields")
    run.add_argument("--d", type=parse_int_list)
    run.add_argument("--m", type=parse_int_list)
    run.add_argument("--N", type=parse_int_list)
    run.add_argument("--p", help="comma separated exponents, e.g. 2,4,inf")
    run.add_argument("--seed", type=int)
    run.add_argument("--samples", type=int)
    run.add_argument("--K", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", help="report file (default: stdout)")
    run.set_defaults(func=_cmd_run)

    q = sub.add_parser("quantize", help="Toeplitz operator of a symbol file")
    q.add_argument("symbol")
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--out")
    q.set_defaults(func=_cmd_quantize)

    h = sub.add_parser("husimi", help="Husimi function of a matrix file")
    h.add_argument("matrix")
    h.add_argument("--out")
    h.set_defaults(func=_cmd_husimi)

    s = sub.add_parser("spectrum", help="sorted eigenvalues (or singular values) and exact trace")
    s.add_argument("matrix")
    s.add_argument("--out")
    s.set_defaults(func=_cmd_spectrum)

    u = sub.add_parser("upsilon", help="interval enclosure of upsilon_{m,n}")
    u.add_argument("--d", type=int, required=True)
    u.add_argument("--m", type=int, required=True)
    u.add_argument("--n", type=int, required=True)
    u.add_argument("--K", type=int, default=asymptotics.DEFAULT_K)
    u.add_argument("--out")
    u.set_defaults(func=_cmd_upsilon)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"btquant: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
