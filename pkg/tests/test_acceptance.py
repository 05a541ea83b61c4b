"""Acceptance criteria 1-11, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line (visible in
``pytest -v`` output) before asserting.
"""

import math
import time

import numpy as np
import pytest
import sympy

from subsig import forms
from subsig.cli import main
from subsig.forms import GroupElement, block_matrix
from subsig.scalars import GaussianRational
from subsig.suites import SuiteParams, run_suite


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, f"criterion {number}: {detail}"

    return emit


def timed(name, **params):
    start = time.perf_counter()
    report = run_suite(name, SuiteParams(**params))
    return report, time.perf_counter() - start


def test_criterion_01_clifford_relations(verdict):
    report, elapsed = timed("clifford-relations")
    ok = report["passed"] and elapsed < 1.0 and report["cases"] == 6
    verdict(1, ok, f"n=1..6 generator relations exact, {report['failures']} failures, {elapsed:.2f} s (limit 1 s)")


def test_criterion_02_supertrace_oracle(verdict):
    report, elapsed = timed("lemma-3.11", trials=500, seed=2)
    full = {r["case"]["n"]: (r["full_word"], r["expected"]) for r in report["results"]}
    full_ok = all(int(v) == e for v, e in full.values())
    ok = report["passed"] and full_ok and elapsed < 30
    verdict(2, ok, f"500 random elements per n=1..5 match the oracle, full words {full}, "
                   f"sub-words zero, {elapsed:.1f} s (limit 30 s)")


def test_criterion_03_tau_square(verdict):
    report, elapsed = timed("tau-square")
    verdict(3, report["passed"] and report["cases"] == 28,
            f"{report['cases']} (n, k) pairs with 0<=k<=n<=6 square to the expected sign, {elapsed:.2f} s")


def test_criterion_04_rotation_lift(verdict):
    report, elapsed = timed("rotation-lift", trials=100, seed=4)
    ok = report["passed"] and report["max_error"] <= 1e-10
    verdict(4, ok, f"n in {{2,4}}, 100 angle tuples each, max entry error {report['max_error']:.2e} (limit 1e-10)")


def test_criterion_05_symbol_expansion(verdict):
    report, elapsed = timed("eq-3.31", n=4, trials=50, seed=5)
    ok = report["passed"] and report["max_error"] <= 1e-10
    verdict(5, ok, f"n=4, a=0, every l2, 50 angle tuples, max error {report['max_error']:.2e} (limit 1e-10)")


def test_criterion_06_berezin_lemma(verdict):
    report, elapsed = timed("lemma-3.19", trials=100, seed=6)
    ok = report["passed"] and report["max_error"] <= 1e-9 and elapsed < 60
    verdict(6, ok, f"(n,k) in {{(4,2),(6,2),(6,4)}} x 100, max rel error {report['max_error']:.2e} "
                   f"(limit 1e-9), {elapsed:.1f} s (limit 60 s)")


def _random_antisymmetric(rng, m, norm):
    a = rng.normal(size=(m, m))
    a = a - a.T
    top = np.abs(np.linalg.eigvals(a)).max()
    return a * (norm / top) if top else a


def test_criterion_07_dual_paths(verdict):
    rng = np.random.default_rng(7)
    worst = {"pf": 0.0, "cosh": 0.0, "sinhc": 0.0, "a_hat": 0.0, "nu": 0.0}
    for _ in range(50):
        for m in (2, 3, 4, 5, 6):
            M = _random_antisymmetric(rng, m, rng.uniform(0.1, 2.0))
            if m % 2 == 0:
                worst["pf"] = max(worst["pf"], abs(forms.pfaffian(M, "chern") - forms.pfaffian(M, "berezin")))
            for key, f in (("cosh", forms.det_sqrt_cosh), ("sinhc", forms.det_sqrt_sinhc), ("a_hat", forms.a_hat)):
                worst[key] = max(worst[key], abs(f(M, "chern") - f(M, "series")))
        angles = tuple(rng.uniform(0.5, 2 * math.pi - 0.5, 2))
        x = rng.uniform(-1, 1, 2)
        x *= rng.uniform(0.1, 2.0) / np.abs(x).max()
        g, M = GroupElement(angles), block_matrix(list(x))
        worst["nu"] = max(worst["nu"], abs(forms.nu_phi(g, M, "chern") - forms.nu_phi(g, M, "series")))
    exact_ok = True
    for _ in range(30):
        m = int(rng.choice([2, 4, 6]))
        A = np.full((m, m), GaussianRational(0), dtype=object)
        S = sympy.zeros(m, m)
        for i in range(m):
            for j in range(i + 1, m):
                num, den = int(rng.integers(-20, 21)), int(rng.integers(1, 8))
                A[i, j], A[j, i] = GaussianRational(num) / den, GaussianRational(-num) / den
                S[i, j], S[j, i] = sympy.Rational(num, den), -sympy.Rational(num, den)
        pf = forms.pfaffian(A)
        sq = pf * pf
        exact_ok &= sq.im == 0 and sympy.Rational(sq.re.numerator, sq.re.denominator) == S.det()
    ok = max(worst.values()) <= 1e-9 and exact_ok
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict(7, ok, f"Chern vs series for ||M||<=2: {detail} (limit 1e-9); Pf^2 = det exact: {exact_ok}")


def test_criterion_08_isolated_fixed_points(verdict):
    report, elapsed = timed("density-even", trials=50, seed=8)
    ok = report["passed"] and report["max_error"] <= 1e-8 and elapsed < 120
    verdict(8, ok, f"n in {{2,4,6}}, even k<=n-2, 50 configs each ({report['cases']} cases), "
                   f"max rel error {report['max_error']:.2e} (limit 1e-8), {elapsed:.1f} s (limit 120 s)")


def test_criterion_09_odd_case(verdict):
    report, elapsed = timed("density-odd", trials=20, seed=9)
    by_case = {}
    for r in report["results"]:
        key = (r["case"]["n"], r["case"]["k"])
        by_case[key] = max(by_case.get(key, 0.0), r["error"])
    detail = ", ".join(f"(n={n},k={k}) {e:.1e}" for (n, k), e in sorted(by_case.items()))
    verdict(9, report["passed"], f"max rel error per (n,k): {detail} (limit 1e-8)")


def test_criterion_10_mehler_oracle(verdict):
    report, elapsed = timed("mehler-oracle")
    r = report["results"][0]
    ok = report["passed"] and elapsed < 120
    orders = ", ".join(f"{q:.2f}" for q in r["orders"])
    verdict(10, ok, f"finest-grid error {r['error']:.2e} (limit 1e-3), observed orders {orders}, "
                    f"{elapsed:.1f} s (limit 120 s)")


def test_criterion_11_determinism(verdict, tmp_path, capsys, monkeypatch):
    runs = [
        ["verify", "--suite", "lemma-3.11", "--n", "4", "--trials", "200", "--mode", "exact", "--seed", "7"],
        ["verify", "--suite", "lemma-3.19", "--trials", "20", "--seed", "3"],
        ["verify", "--suite", "density-even", "--trials", "10", "--seed", "3"],
        ["verify", "--suite", "density-even", "--n", "6", "--a", "4", "--k", "4", "--mode", "nilpotent",
         "--trials", "5", "--seed", "3"],
        ["density", "--n", "6", "--k", "2", "--seed", "11"],
    ]
    identical = True
    for i, argv in enumerate(runs):
        blobs = []
        for threads in ("1", "2"):
            monkeypatch.setenv("SUBSIG_THREADS", threads)
            path = tmp_path / f"r{i}_{threads}.json"
            main(argv + ["--json", str(path)])
            blobs.append(path.read_bytes())
        path = tmp_path / f"r{i}_again.json"
        main(argv + ["--json", str(path)])
        blobs.append(path.read_bytes())
        identical &= len(set(blobs)) == 1
    capsys.readouterr()
    verdict(11, identical, f"{len(runs)} configurations rerun (and with 1 vs 2 workers) give byte-identical JSON")
