"""``subsig`` command-line driver.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
errors (bad flags, malformed config, unknown suite).  JSON reports are
written with sorted keys and no timing data so that the same seed and
config reproduce the file byte for byte; wall time goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, density, mehler, suites
from .clifford import ConvergenceError, UsageError
from .config import RunConfig, load_config
from .forms import SingularityError

SCHEMA = 1
EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--json", help="write the JSON report here")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("exact", "float", "nilpotent"))
    p.add_argument("--tol", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subsig", description="Sub-signature index density checks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification suites")
    group = v.add_mutually_exclusive_group()
    group.add_argument("--suite", help=f"one of: {', '.join(suites.SUITES)}")
    group.add_argument("--all", action="store_true", help="run every suite with its defaults")
    for flag in ("--n", "--a", "--k", "--trials"):
        v.add_argument(flag, type=int)
    _common(v)

    d = sub.add_parser("density", help="both sides of the index density at one fixed point")
    for flag in ("--n", "--a", "--k"):
        d.add_argument(flag, type=int)
    _common(d)

    m = sub.add_parser("mehler", help="finite-difference check of the oscillator factor")
    m.add_argument("--theta", type=float)
    m.add_argument("--t", type=float)
    m.add_argument("--csv", help="write the convergence table here")
    _common(m)

    r = sub.add_parser("report", help="summarize a JSON report")
    r.add_argument("report", help="path of a report written by verify/density/mehler")
    return parser


def _merge(args, cfg: RunConfig, keys) -> dict:
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key)
    return out


def _config(args) -> RunConfig:
    return load_config(args.config) if args.config else RunConfig({})


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if path:
        Path(path).write_text(text)


def _complex(z: complex) -> list[float]:
    return [z.real, z.imag]


def cmd_verify(args) -> int:
    cfg = _config(args)
    o = _merge(args, cfg, ("suite", "n", "a", "k", "trials", "seed", "mode", "tol"))
    if args.all:
        names = list(suites.SUITES)
    elif o["suite"]:
        names = [o["suite"]]
    else:
        raise UsageError("verify needs --suite NAME or --all")
    for name in names:
        if name not in suites.SUITES:
            raise UsageError(f"unknown suite {name!r}; choose from {', '.join(suites.SUITES)}")
    seed = o["seed"] if o["seed"] is not None else 0
    extra = tuple((k, cfg.get(k)) for k in ("theta", "t", "spacings") if cfg.get(k) is not None)
    reports = []
    for name in names:
        if args.all:
            params = suites.SuiteParams(seed=seed, tol=o["tol"])
        else:
            params = suites.SuiteParams(o["n"], o["a"], o["k"], o["trials"], seed, o["mode"], o["tol"], extra)
        start = time.perf_counter()
        rep = suites.run_suite(name, params)
        elapsed = time.perf_counter() - start
        status = "PASS" if rep["passed"] else "FAIL"
        print(f"{status} {name}: {rep['cases'] - rep['failures']}/{rep['cases']} cases, max error {rep['max_error']:.3g}")
        print(f"{name}: {elapsed:.2f} s", file=sys.stderr)
        reports.append(rep)
    passed = all(r["passed"] for r in reports)
    _emit({"schema": SCHEMA, "command": "verify", "passed": passed, "suites": reports}, args.json)
    return EXIT_PASS if passed else EXIT_FAIL


def _fixed_point_from(o: dict, cfg: RunConfig) -> density.FixedPointData:
    n, a, k = o["n"], o["a"] or 0, o["k"] or 0
    if n is None:
        raise UsageError("density needs n (flag --n or config key)")
    ring = o["mode"] or ("nilpotent" if a else "float")
    if ring == "exact":
        raise UsageError("densities use the float or nilpotent mode")
    angles = cfg.get("angles")
    seed = o["seed"] if o["seed"] is not None else 0
    rng = np.random.default_rng([seed, 0])
    if angles is None or angles == "random":
        if cfg.get("curvature") is None:
            return density.random_fixed_point(n, a, k, rng, ring=ring)
        count = (n - a) // 2
        angles = list(rng.uniform(0.2, 2 * math.pi - 0.2, count))
    return density.FixedPointData(n, a, k, tuple(angles), ring, cfg.get("curvature"))


def cmd_density(args) -> int:
    cfg = _config(args)
    o = _merge(args, cfg, ("n", "a", "k", "seed", "mode", "tol"))
    data = _fixed_point_from(o, cfg)
    start = time.perf_counter()
    if data.odd:
        lhs, rhs = density.odd_density_pair(data)
    else:
        lhs, rhs = density.lhs_density(data), density.rhs_density(data)
    elapsed = time.perf_counter() - start
    tol = o["tol"] if o["tol"] is not None else 1e-8
    rel = density.relative_error(lhs, rhs)
    passed = rel <= tol
    report = {
        "schema": SCHEMA,
        "command": "density",
        "n": data.n, "a": data.a, "k": data.k,
        "mode": data.ring,
        "angles": list(data.phi_angles),
        "lhs": _complex(lhs), "rhs": _complex(rhs),
        "abs_error": abs(lhs - rhs), "rel_error": rel,
        "tol": tol, "passed": passed,
    }
    print(f"lhs = {lhs:.15g}\nrhs = {rhs:.15g}\nrelative error = {rel:.3g} ({'PASS' if passed else 'FAIL'})")
    print(f"density: {elapsed:.3f} s", file=sys.stderr)
    _emit(report, args.json)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_mehler(args) -> int:
    cfg = _config(args)
    o = _merge(args, cfg, ("theta", "t", "tol"))
    theta = o["theta"] if o["theta"] is not None else 0.5
    t = o["t"] if o["t"] is not None else 0.5
    spacings = cfg.get("spacings") or list(suites.MEHLER_SPACINGS)
    if isinstance(spacings, str) or any(h <= 0 for h in spacings):
        raise UsageError("spacings must be positive numbers")
    tol = o["tol"] if o["tol"] is not None else 1e-3
    start = time.perf_counter()
    rows = mehler.convergence_study(theta, t, spacings)
    elapsed = time.perf_counter() - start
    orders = mehler.observed_orders(rows)
    passed = rows[-1].error <= tol and all(1.7 <= q <= 2.3 for q in orders)
    for r in rows:
        print(f"h = {r.spacing:<8g} fd = {r.fd_value:.10f}  closed = {r.closed_form:.10f}  error = {r.error:.3e}")
    print("observed orders: " + ", ".join(f"{q:.2f}" for q in orders))
    print("PASS" if passed else "FAIL")
    print(f"mehler: {elapsed:.2f} s", file=sys.stderr)
    csv_path = args.csv or cfg.get("csv")
    if csv_path:
        mehler.write_csv(rows, csv_path)
    report = {
        "schema": SCHEMA, "command": "mehler", "theta": theta, "t": t, "tol": tol,
        "rows": [{"spacing": r.spacing, "fd_value": r.fd_value, "closed_form": r.closed_form,
                  "error": r.error} for r in rows],
        "orders": orders, "passed": passed,
    }
    _emit(report, args.json)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {args.report}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.report} is not JSON: {exc}") from None
    if not isinstance(report, dict) or report.get("schema") != SCHEMA:
        raise UsageError(f"{args.report}: unsupported report schema")
    if report.get("command") == "verify":
        for s in report["suites"]:
            print(f"{'PASS' if s['passed'] else 'FAIL'} {s['suite']}: "
                  f"{s['cases'] - s['failures']}/{s['cases']} cases, max error {s['max_error']:.3g}")
    else:
        print(f"{report.get('command')}: {'PASS' if report.get('passed') else 'FAIL'}")
    return EXIT_PASS if report.get("passed") else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "density": cmd_density, "mehler": cmd_mehler, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"subsig: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularityError, ConvergenceError) as exc:
        print(f"subsig: numeric error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
