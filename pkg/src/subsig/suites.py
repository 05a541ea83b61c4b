"""Verification suites run by the command-line driver and the acceptance tests.

A suite expands its parameters into independent *cases*; every case is
run with its own generator ``default_rng([seed, index])``, so results do
not depend on how cases are scheduled across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import density, forms, matrix_rep, mehler
from .clifford import (
    CliffordElement,
    UsageError,
    build_tau,
    grading_element,
    rotation_lift,
    supertrace,
    supertrace_sign,
)
from .scalars import GaussianRational


@dataclass(frozen=True)
class SuiteParams:
    n: int | None = None
    a: int | None = None
    k: int | None = None
    trials: int | None = None
    seed: int = 0
    mode: str | None = None
    tol: float | None = None
    extra: tuple[tuple[str, Any], ...] = ()

    def get(self, key: str, default=None):
        return dict(self.extra).get(key, default)


@dataclass(frozen=True)
class Case:
    index: int
    label: dict
    payload: dict = field(default_factory=dict)


@dataclass
class SuiteSpec:
    name: str
    modes: tuple[str, ...]
    default_trials: int
    default_tol: float
    cases: Callable[[SuiteParams], list[Case]]
    run: Callable[[Case, np.random.Generator, SuiteParams], dict]


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _ns(p: SuiteParams, default):
    return [p.n] if p.n is not None else list(default)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _result(ok: bool, error: float, **values) -> dict:
    out = {"pass": bool(ok), "error": float(error)}
    for key, v in values.items():
        out[key] = _jsonable(v)
    return out


# -- exact algebra suites -------------------------------------------------------


def _relations_cases(p: SuiteParams):
    return [Case(i, {"n": n}) for i, n in enumerate(_ns(p, range(1, 7)))]


def _relations_run(case: Case, rng, p: SuiteParams) -> dict:
    n = case.label["n"]
    bad = 0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            ci, cj = CliffordElement.gen_c(n, i), CliffordElement.gen_c(n, j)
            hi, hj = CliffordElement.gen_hat(n, i), CliffordElement.gen_hat(n, j)
            delta = 2 if i == j else 0
            checks = [
                (ci * cj + cj * ci, -delta),
                (hi * hj + hj * hi, delta),
                (ci * hj + hj * ci, 0),
            ]
            for lhs, value in checks:
                if lhs != CliffordElement.scalar(n, value):
                    bad += 1
            # the same relations for the dense operators on Lambda(V)
            if n <= 6:
                mi, mj = matrix_rep.c_matrix(n, i), matrix_rep.c_matrix(n, j)
                ni, nj = matrix_rep.chat_matrix(n, i), matrix_rep.chat_matrix(n, j)
                eye = np.eye(1 << n, dtype=np.int64)
                bad += int(not np.array_equal(mi @ mj + mj @ mi, -delta * eye))
                bad += int(not np.array_equal(ni @ nj + nj @ ni, delta * eye))
                bad += int(not np.array_equal(mi @ nj + nj @ mi, 0 * eye))
    return _result(bad == 0, bad, failures=bad)


def random_exact_element(n: int, rng: np.random.Generator, nterms: int | None = None) -> CliffordElement:
    nterms = nterms or int(rng.integers(1, 9))
    blades = {}
    for _ in range(nterms):
        c = int(rng.integers(0, 1 << n))
        h = int(rng.integers(0, 1 << n))
        re = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))
        im = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))
        blades[(c, h)] = GaussianRational(re, im)
    # always include the full word so the nonzero supertrace path is exercised
    full = (1 << n) - 1
    blades.setdefault((full, full), GaussianRational(int(rng.integers(1, 5))))
    return CliffordElement.from_blades(n, blades)


def _supertrace_cases(p: SuiteParams):
    trials = p.trials or 500
    return [Case(i, {"n": n, "trials": trials}) for i, n in enumerate(_ns(p, range(1, 6)))]


def _supertrace_run(case: Case, rng, p: SuiteParams) -> dict:
    n, trials = case.label["n"], case.label["trials"]
    mismatches = 0
    for _ in range(trials):
        x = random_exact_element(n, rng)
        if supertrace(x) != matrix_rep.oracle_supertrace(x):
            mismatches += 1
    full = CliffordElement.word(n, range(1, n + 1), range(1, n + 1))
    full_value = supertrace(full)
    expected = supertrace_sign(n) * 2**n
    full_ok = full_value == expected and matrix_rep.oracle_supertrace(full) == expected
    # every other blade is traceless in both paths
    sub_bad = 0
    for c in range(1 << n):
        for h in range(1 << n):
            if c == h == (1 << n) - 1:
                continue
            w = CliffordElement.from_blades(n, {(c, h): 1})
            if supertrace(w) != 0 or matrix_rep.oracle_supertrace(w) != 0:
                sub_bad += 1
    ok = mismatches == 0 and full_ok and sub_bad == 0
    return _result(ok, mismatches + sub_bad + (not full_ok), mismatches=mismatches,
                   full_word=str(full_value), expected=expected, nonzero_subwords=sub_bad)


def _tau_cases(p: SuiteParams):
    out = []
    for n in _ns(p, range(0, 7)):
        ks = [p.k] if p.k is not None else range(0, n + 1)
        for k in ks:
            if not 0 <= k <= n:
                raise UsageError(f"k={k} outside 0..n")
            out.append(Case(len(out), {"n": n, "k": k}))
    return out


def _tau_run(case: Case, rng, p: SuiteParams) -> dict:
    n, k = case.label["n"], case.label["k"]
    tau = build_tau(n, k)
    sign = tau.expected_square_sign
    m = matrix_rep.rep_tau(tau)
    oracle_ok = np.array_equal(m @ m, sign * np.eye(1 << n, dtype=np.int64))
    t = grading_element(n) * tau.chat_E
    algebra_ok = t * t == CliffordElement.scalar(n, sign)
    return _result(oracle_ok and algebra_ok, int(not oracle_ok) + int(not algebra_ok), sign=sign)


# -- numeric suites ----------------------------------------------------------------


def _angles(rng, count: int, margin: float = 0.0) -> list[float]:
    return [float(t) for t in rng.uniform(margin, 2 * math.pi - margin, count)]


def _trial_cases(p: SuiteParams, combos: list[dict], default_trials: int):
    trials = p.trials or default_trials
    out = []
    for combo in combos:
        for t in range(trials):
            out.append(Case(len(out), dict(combo, trial=t)))
    return out


def _rotation_cases(p: SuiteParams):
    return _trial_cases(p, [{"n": n} for n in _ns(p, (2, 4))], 100)


def _rotation_run(case: Case, rng, p: SuiteParams) -> dict:
    n = case.label["n"]
    a = p.a or 0
    angles = _angles(rng, (n - a) // 2)
    lift = matrix_rep.rep(rotation_lift(angles, n, a))
    oracle = matrix_rep.pullback_lift(angles, n, a)
    err = float(np.abs(lift - oracle).max())
    return _result(err <= _tol(p, "rotation-lift"), err, angles=angles)


def _eq331_cases(p: SuiteParams):
    return _trial_cases(p, [{"n": n} for n in _ns(p, (4,))], 50)


def _eq331_run(case: Case, rng, p: SuiteParams) -> dict:
    n = case.label["n"]
    k = p.k if p.k is not None else 0
    data = density.FixedPointData(n, 0, k, tuple(_angles(rng, n // 2, 0.05)))
    err = 0.0
    for l2 in range(0, n + 1):
        left, right = density.symbol_expansion_lift(data, l2)
        err = max(err, left.max_abs_diff(right))
    return _result(err <= _tol(p, "eq-3.31"), err, angles=list(data.phi_angles))


def _random_rotation(rng, size: int) -> np.ndarray:
    if size == 0:
        return np.zeros((0, 0))
    q, r = np.linalg.qr(rng.normal(size=(size, size)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _lemma_cases(p: SuiteParams):
    if p.n is not None:
        combos = [{"n": p.n, "k": p.k if p.k is not None else 2}]
    else:
        combos = [{"n": 4, "k": 2}, {"n": 6, "k": 2}, {"n": 6, "k": 4}]
    return _trial_cases(p, combos, 100)


def _lemma_run(case: Case, rng, p: SuiteParams) -> dict:
    n, k = case.label["n"], case.label["k"]
    angles = _angles(rng, n // 2)
    ME = forms.block_matrix(angles[: k // 2])
    MP = forms.block_matrix(angles[k // 2 :])
    # general antisymmetric input: conjugate each block by a random rotation
    qe, qp = _random_rotation(rng, k), _random_rotation(rng, n - k)
    ME, MP = qe @ ME @ qe.T, qp @ MP @ qp.T
    lhs = density.lemma_berezin_lhs(ME, MP)
    rhs = density.lemma_berezin_rhs(ME, MP)
    err = density.relative_error(lhs, rhs)
    return _result(err <= _tol(p, "lemma-3.19"), err, lhs=complex(lhs), rhs=complex(rhs), angles=angles)


def _even_cases(p: SuiteParams):
    a = p.a or 0
    combos = []
    for n in _ns(p, (2, 4, 6)):
        ks = [p.k] if p.k is not None else range(0, n - 1, 2)
        combos += [{"n": n, "a": a, "k": k} for k in ks]
    return _trial_cases(p, combos, 50)


def _density_run_even(case: Case, rng, p: SuiteParams) -> dict:
    n, a, k = case.label["n"], case.label["a"], case.label["k"]
    ring = p.mode if p.mode in ("float", "nilpotent") else None
    data = density.random_fixed_point(n, a, k, rng, ring=ring)
    lhs, rhs = density.lhs_density(data), density.rhs_density(data)
    err = density.relative_error(lhs, rhs)
    return _result(err <= _tol(p, "density-even"), err, lhs=lhs, rhs=rhs, angles=list(data.phi_angles))


def _odd_cases(p: SuiteParams):
    a = p.a or 0
    combos = []
    for n in _ns(p, (3, 5)):
        ks = [p.k] if p.k is not None else (0, 2)
        combos += [{"n": n, "a": a, "k": k} for k in ks if k < n]
    return _trial_cases(p, combos, 20)


def _density_run_odd(case: Case, rng, p: SuiteParams) -> dict:
    n, a, k = case.label["n"], case.label["a"], case.label["k"]
    ring = p.mode if p.mode in ("float", "nilpotent") else None
    data = density.random_fixed_point(n, a, k, rng, ring=ring)
    lhs, rhs = density.odd_density_pair(data)
    err = density.relative_error(lhs, rhs)
    return _result(err <= _tol(p, "density-odd"), err, lhs=lhs, rhs=rhs, angles=list(data.phi_angles))


MEHLER_SPACINGS = (0.1, 0.05, 0.025)


def _mehler_cases(p: SuiteParams):
    theta = float(p.get("theta", 0.5))
    t = float(p.get("t", 0.5))
    spacings = tuple(p.get("spacings", MEHLER_SPACINGS))
    return [Case(0, {"theta": theta, "t": t, "spacings": list(spacings)})]


def _mehler_run(case: Case, rng, p: SuiteParams) -> dict:
    rows = mehler.convergence_study(case.label["theta"], case.label["t"], case.label["spacings"])
    orders = mehler.observed_orders(rows)
    finest = rows[-1].error
    order_ok = all(1.7 <= q <= 2.3 for q in orders)
    ok = finest <= _tol(p, "mehler-oracle") and order_ok
    return _result(ok, finest, closed_form=rows[-1].closed_form, orders=orders,
                   rows=[[r.spacing, r.fd_value, r.error] for r in rows])


SUITES: dict[str, SuiteSpec] = {
    s.name: s
    for s in [
        SuiteSpec("clifford-relations", ("exact",), 1, 0.0, _relations_cases, _relations_run),
        SuiteSpec("lemma-3.11", ("exact",), 500, 0.0, _supertrace_cases, _supertrace_run),
        SuiteSpec("tau-square", ("exact",), 1, 0.0, _tau_cases, _tau_run),
        SuiteSpec("rotation-lift", ("float",), 100, 1e-10, _rotation_cases, _rotation_run),
        SuiteSpec("eq-3.31", ("float",), 50, 1e-10, _eq331_cases, _eq331_run),
        SuiteSpec("lemma-3.19", ("float",), 100, 1e-9, _lemma_cases, _lemma_run),
        SuiteSpec("density-even", ("float", "nilpotent"), 50, 1e-8, _even_cases, _density_run_even),
        SuiteSpec("density-odd", ("float", "nilpotent"), 20, 1e-8, _odd_cases, _density_run_odd),
        SuiteSpec("mehler-oracle", ("float",), 1, 1e-3, _mehler_cases, _mehler_run),
    ]
}


def _tol(p: SuiteParams, name: str) -> float:
    return p.tol if p.tol is not None else SUITES[name].default_tol


def worker_count() -> int:
    cap = os.environ.get("SUBSIG_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"SUBSIG_THREADS must be an integer, got {cap!r}") from None
    return n


def _run_case(args):
    name, case, params = args
    spec = SUITES[name]
    out = spec.run(case, _rng(params.seed, case.index), params)
    return dict(case=case.label, trial=case.index, seed=[params.seed, case.index], **out)


def run_suite(name: str, params: SuiteParams, workers: int | None = None) -> dict:
    """Run every case of ``name``; results are ordered by case index."""
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    spec = SUITES[name]
    if params.mode is not None and params.mode not in spec.modes:
        raise UsageError(f"suite {name} supports mode {'/'.join(spec.modes)}, not {params.mode}")
    if params.trials is not None and params.trials < 1:
        raise UsageError("trials must be positive")
    cases = spec.cases(params)
    jobs = [(name, c, params) for c in cases]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_case, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_case(j) for j in jobs]
    return {
        "suite": name,
        "params": {
            "n": params.n, "a": params.a, "k": params.k, "trials": params.trials,
            "seed": params.seed, "mode": params.mode or spec.modes[0],
            "tol": _tol(params, name),
        },
        "cases": len(results),
        "failures": sum(not r["pass"] for r in results),
        "max_error": max((r["error"] for r in results), default=0.0),
        "passed": all(r["pass"] for r in results),
        "results": results,
    }
