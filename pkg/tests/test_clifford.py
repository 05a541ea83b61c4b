import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subsig import matrix_rep
from subsig.clifford import (
    BigradedForm,
    CliffordElement,
    ConvergenceError,
    UsageError,
    bigraded_component,
    build_tau,
    clifford_exp,
    exp_block_closed_form,
    grading_element,
    quadratic_hat,
    quantize,
    reflection_lift,
    rotation_lift,
    supercommutator,
    supertrace,
    symbol,
    to_text,
    trace,
    wedge_exp,
)
from subsig.scalars import GaussianRational, NilPoly
from subsig.suites import random_exact_element

seeds = st.integers(0, 2**32 - 1)


def _elem(n, seed):
    return random_exact_element(n, np.random.default_rng(seed))


@pytest.mark.parametrize("n", range(1, 5))
def test_generator_relations(n):
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            d = 2 if i == j else 0
            ci, cj = CliffordElement.gen_c(n, i), CliffordElement.gen_c(n, j)
            hi, hj = CliffordElement.gen_hat(n, i), CliffordElement.gen_hat(n, j)
            assert ci * cj + cj * ci == CliffordElement.scalar(n, -d)
            assert hi * hj + hj * hi == CliffordElement.scalar(n, d)
            assert ci * hj + hj * ci == CliffordElement.scalar(n, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), seeds)
def test_product_matches_operator_product(n, seed):
    rng = np.random.default_rng(seed)
    x, y = random_exact_element(n, rng), random_exact_element(n, rng)
    lhs = matrix_rep.rep(x * y)
    rhs = matrix_rep.rep(x) @ matrix_rep.rep(y)
    assert (lhs == rhs).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), seeds)
def test_product_is_associative(n, seed):
    rng = np.random.default_rng(seed)
    x, y, z = (random_exact_element(n, rng) for _ in range(3))
    assert (x * y) * z == x * (y * z)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), seeds)
def test_supertrace_matches_oracle(n, seed):
    x = _elem(n, seed)
    assert supertrace(x) == matrix_rep.oracle_supertrace(x)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), seeds)
def test_supertrace_kills_supercommutators(n, seed):
    rng = np.random.default_rng(seed)
    x, y = random_exact_element(n, rng), random_exact_element(n, rng)
    assert supertrace(supercommutator(x, y)) == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), seeds)
def test_trace_matches_oracle(n, seed):
    x = _elem(n, seed)
    assert trace(x) == matrix_rep.oracle_trace(x)


@pytest.mark.parametrize("n,value", [(1, -2), (2, -4), (3, 8), (4, 16), (5, -32)])
def test_full_word_supertrace(n, value):
    # frozen from the exterior-algebra oracle
    w = CliffordElement.word(n, range(1, n + 1), range(1, n + 1))
    assert supertrace(w) == value
    assert matrix_rep.oracle_supertrace(w) == value


@pytest.mark.parametrize("n", range(0, 7))
def test_tau_squares(n):
    for k in range(n + 1):
        tau = build_tau(n, k)
        m = matrix_rep.rep_tau(tau)
        assert np.array_equal(m @ m, tau.expected_square_sign * np.eye(1 << n, dtype=np.int64))


def test_grading_element_is_the_exterior_parity():
    for n in range(1, 5):
        assert np.array_equal(matrix_rep.rep(grading_element(n)).astype(complex).real, matrix_rep.grading_matrix(n))


def test_reflection_lift_matches_pullback():
    n = 3
    g = np.diag([1.0, 1.0, -1.0])
    assert np.allclose(matrix_rep.rep(reflection_lift(n, 3)).astype(complex), matrix_rep.exterior_power(g))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 2 * math.pi), min_size=2, max_size=2))
def test_rotation_lift_matches_pullback(angles):
    lift = matrix_rep.rep(rotation_lift(angles, 4))
    assert np.abs(lift - matrix_rep.pullback_lift(angles, 4)).max() < 1e-10


def test_rotation_lift_with_fixed_directions():
    angles = [0.7]
    lift = matrix_rep.rep(rotation_lift(angles, 4, a=2))
    assert np.abs(lift - matrix_rep.pullback_lift(angles, 4, a=2)).max() < 1e-12


def test_rotation_lift_rejects_bad_rank():
    with pytest.raises(UsageError):
        rotation_lift([0.3], 3)
    with pytest.raises(UsageError):
        rotation_lift([0.3], 2, ring="exact")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-6, 6), min_size=2, max_size=2))
def test_exp_of_quadratic_matches_block_closed_form(angles):
    n = 4
    M = np.zeros((n, n))
    for j, t in enumerate(angles):
        M[2 * j, 2 * j + 1], M[2 * j + 1, 2 * j] = -t, t
    series = clifford_exp(quadratic_hat(M, range(1, n + 1), n))
    closed = exp_block_closed_form([-t / 2 for t in angles], [(1, 2), (3, 4)], n)
    assert series.max_abs_diff(closed) < 1e-10


def test_exp_needs_inexact_ring():
    with pytest.raises(UsageError):
        clifford_exp(CliffordElement.gen_hat(2, 1))


def test_exp_with_nilpotent_coefficients_terminates():
    n = 2
    eps = NilPoly.gen(2, 0) + NilPoly.gen(2, 1)
    x = CliffordElement.word(n, (), (1, 2), eps, "nilpotent", 2)
    out = clifford_exp(x)
    # (eps0 + eps1)^2 = 2 eps0 eps1 and (chat1 chat2)^2 = -1
    assert out.scalar_part() == NilPoly(2, {0: 1, 3: -1})
    assert out.coefficient((), (1, 2)) == eps


def test_exp_reports_nonconvergence():
    x = CliffordElement.word(2, (), (1,), float("nan"), "float")
    with pytest.raises(ConvergenceError):
        clifford_exp(x)


def test_symbol_roundtrip_and_components():
    x = CliffordElement.word(3, (1, 2), (3,), 2) + CliffordElement.scalar(3, 1)
    assert quantize(symbol(x)) == x
    w = symbol(x, 1)
    comp = bigraded_component(w, (1, 1), (0, 1))
    assert comp.terms == {next(iter(CliffordElement.word(3, (1, 2), (3,)).terms)): 2}
    with pytest.raises(UsageError):
        bigraded_component(w, (2, 0), (0, 0))


def test_wedge_exp_of_two_form_is_pfaffian_weighted():
    # exp(x e1^e2 + y e3^e4) top coefficient is x*y
    form = BigradedForm(4, {0b0011: GaussianRational(3), 0b1100: GaussianRational(5)})
    top = wedge_exp(form)
    assert top.coefficient((1, 2, 3, 4), ()) == 15


def test_text_form():
    x = CliffordElement.word(3, (1, 2), (3,), 2) + CliffordElement.scalar(3, 1)
    assert to_text(x) == "1 * c[] ^ ĉ[] + 2 * c[1,2] ^ ĉ[3]"


def test_dense_representation_size_cap():
    with pytest.raises(matrix_rep.ResourceError):
        matrix_rep.rep(CliffordElement.scalar(11, 1))
