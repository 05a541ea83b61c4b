import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subsig import density, forms
from subsig.clifford import UsageError
from subsig.density import (
    FixedPointData,
    lemma_3_19_lhs,
    lemma_3_19_rhs,
    lemma_berezin_lhs,
    lemma_berezin_rhs,
    lhs_density,
    mehler_prefactor,
    mehler_value,
    odd_density_pair,
    random_fixed_point,
    relative_error,
    rhs_density,
    symbol_expansion_lift,
)
from subsig.forms import SingularityError

seeds = st.integers(0, 2**32 - 1)
angle = st.floats(0.05, 2 * math.pi - 0.05)


def test_lemma_block_example():
    t, s = 0.8, 2.1
    d = FixedPointData(4, 0, 2, (1.0, 1.0))
    expected = -math.cos(t / 2) * math.sin(s / 2)
    assert lemma_3_19_lhs(d, [t, s]).real == pytest.approx(expected)
    assert lemma_3_19_rhs(d, [t, s]) == pytest.approx(expected)


def test_lemma_vanishes_at_zero_angles():
    z = np.zeros((2, 2))
    assert abs(lemma_berezin_lhs(z, np.zeros((4, 4)))) == 0
    assert lemma_berezin_rhs(z, np.zeros((4, 4))) == 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(4, 2), (6, 2), (6, 4), (4, 0)]), seeds)
def test_lemma_general_antisymmetric(nk, seed):
    n, k = nk
    rng = np.random.default_rng(seed)

    def anti(m):
        a = rng.normal(size=(m, m))
        return a - a.T

    ME, MP = anti(k), anti(n - k)
    lhs, rhs = lemma_berezin_lhs(ME, MP), lemma_berezin_rhs(ME, MP)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))
    # the series route is only meant for moderate norms
    def shrink(m):
        return m / max(1.0, np.linalg.norm(m, 2) / 2) if m.size else m

    sE, sP = shrink(ME), shrink(MP)
    small = lemma_berezin_lhs(sE, sP)
    assert abs(small - lemma_berezin_rhs(sE, sP, method="series")) <= 1e-9 * max(1.0, abs(small))


def test_lemma_conjugation_invariance():
    rng = np.random.default_rng(11)
    ME = forms.block_matrix([0.7])
    MP = forms.block_matrix([1.1, 2.3])
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    base = lemma_berezin_lhs(ME, MP)
    assert lemma_berezin_lhs(ME, q @ MP @ q.T) == pytest.approx(base)


def test_isolated_point_pi_rotation():
    d = FixedPointData(2, 0, 0, (math.pi,))
    assert lhs_density(d) == pytest.approx(1.0)
    assert rhs_density(d) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 0), (4, 0), (4, 2), (6, 0), (6, 2), (6, 4)]), seeds)
def test_even_density_two_paths(nk, seed):
    n, k = nk
    d = random_fixed_point(n, 0, k, np.random.default_rng(seed))
    assert relative_error(lhs_density(d), rhs_density(d)) <= 1e-8


@pytest.mark.parametrize("n,k", [(2, 0), (4, 2), (6, 4)])
def test_even_density_closed_form(n, k):
    # (-i)^{k/2} prod over E planes of cot(t/2), frozen from a hand evaluation
    angles = tuple(0.6 + 0.9 * j for j in range(n // 2))
    d = FixedPointData(n, 0, k, angles)
    expected = (-1j) ** (k // 2) * math.prod(1 / math.tan(t / 2) for t in angles[: k // 2])
    assert lhs_density(d) == pytest.approx(expected)


def test_rhs_at_zero_curvature_reduces_to_kernel_product():
    d = FixedPointData(4, 0, 2, (1.2, 2.9))
    L1, L2 = d.L1, d.L2
    value = ((1 / 1j) * 4 * forms.nu_phi(d.group) * forms.det_sqrt_cosh(-L1)
             * forms.det_sqrt_sinhc(-L2) * forms.pfaffian(-L2 / 2))
    assert rhs_density(d) == pytest.approx(value)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(2, 2, 0), (4, 2, 0), (4, 4, 0), (6, 4, 4), (6, 2, 0)]), seeds)
def test_nilpotent_densities_agree(nak, seed):
    n, a, k = nak
    d = random_fixed_point(n, a, k, np.random.default_rng(seed))
    lhs, rhs = lhs_density(d), rhs_density(d)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


def test_nilpotent_density_is_top_degree():
    d = random_fixed_point(4, 2, 0, np.random.default_rng(2))
    # scaling every 2-form by s scales the (a, 0) part by s^{a/2}
    R2 = np.empty_like(d.R)
    for idx, v in np.ndenumerate(d.R):
        R2[idx] = v * 3.0
    d2 = FixedPointData(4, 2, 0, d.phi_angles, "nilpotent", R2)
    assert lhs_density(d2) == pytest.approx(3.0 * lhs_density(d))


def test_validation():
    with pytest.raises(UsageError):
        FixedPointData(4, 0, 4, (1.0, 2.0))
    with pytest.raises(UsageError):
        FixedPointData(4, 0, 1, (1.0, 2.0))
    with pytest.raises(UsageError):
        FixedPointData(4, 0, 2, (1.0,))
    with pytest.raises(UsageError):
        FixedPointData(4, 2, 0, (1.0,))  # a > 0 needs the nilpotent ring
    with pytest.raises(SingularityError):
        FixedPointData(2, 0, 0, (0.0,))
    R = np.zeros((4, 4))
    R[1, 2], R[2, 1] = 1.0, -1.0  # couples E and E^perp
    with pytest.raises(UsageError):
        FixedPointData(4, 0, 2, (1.0, 2.0), curvature=R)


def test_curvature_must_commute_with_rotation():
    R = np.zeros((4, 4))
    R[0, 2], R[2, 0] = 1.0, -1.0
    with pytest.raises(UsageError):
        FixedPointData(4, 0, 0, (1.0, 2.0), curvature=R)


@settings(max_examples=20, deadline=None)
@given(st.lists(angle, min_size=2, max_size=2))
def test_symbol_expansion_two_ways(angles):
    d = FixedPointData(4, 0, 2, tuple(angles))
    for l2 in range(0, 7):
        left, right = symbol_expansion_lift(d, l2)
        assert left.max_abs_diff(right) < 1e-10


def test_symbol_expansion_pi_rotation():
    d = FixedPointData(2, 0, 0, (math.pi,))
    left, right = symbol_expansion_lift(d, 2)
    # the lift of a half turn is -c1 c2 chat1 chat2
    assert left.coefficient((1, 2), (1, 2)) == pytest.approx(-1)
    assert left.max_abs_diff(right) < 1e-12


def test_mehler_prefactor_zero_curvature():
    d = FixedPointData(4, 0, 2, (1.0, 2.5))
    # det^{-1/2}(1 - phi) twice: 1 / prod 4 sin^2(t/2)
    expected = 1 / (16 * (math.sin(0.5) * math.sin(1.25)) ** 2)
    assert mehler_prefactor(d, 1.0) == pytest.approx(expected)
    assert mehler_prefactor(d, 0.3) == pytest.approx(expected)


def test_mehler_prefactor_volume_factor():
    d = random_fixed_point(4, 2, 0, np.random.default_rng(0))
    zero = FixedPointData(4, 2, 0, d.phi_angles, "nilpotent")
    p1, p2 = mehler_prefactor(zero, 1.0), mehler_prefactor(zero, 2.0)
    assert cmath.isclose(p1.constant / p2.constant, 2.0)


def test_mehler_exponential_closed_form():
    R = np.zeros((4, 4))
    R[0, 1], R[1, 0] = -0.4, 0.4
    d = FixedPointData(4, 0, 2, (1.0, 2.0), curvature=R)
    mv = mehler_value(d)
    assert mv.exp_factor.scalar_part() == pytest.approx(math.cos(0.2))
    assert mv.exp_factor.coefficient((), (1, 2)) == pytest.approx(-math.sin(0.2))
    assert mv.chat_factor.coefficient((), (1, 2)) == pytest.approx(1j)


@pytest.mark.parametrize("n,a", [(3, 0), (5, 0), (5, 2), (5, 4)])
def test_odd_pair_rank_two(n, a):
    k = 2
    d = random_fixed_point(n, a, k, np.random.default_rng(n + a))
    lhs, rhs = odd_density_pair(d)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(rhs))


def test_odd_pair_prefactor_for_rank_two():
    # k = 2 reduces the prefactor to -2^{n/2}; rhs at a = 0 is then real
    d = FixedPointData(3, 0, 2, (2.0,))
    _, rhs = odd_density_pair(d)
    assert abs(rhs.imag) < 1e-14


@pytest.mark.parametrize("n,k", [(3, 0), (5, 0), (5, 4)])
def test_odd_pair_phase_for_other_ranks(n, k):
    # the odd prefactor leaves a constant phase i^{1 - k/2} between the sides
    d = random_fixed_point(n, 0, k, np.random.default_rng(1))
    lhs, rhs = odd_density_pair(d)
    assert lhs == pytest.approx(1j ** (1 - k // 2) * rhs)


def test_odd_pair_needs_odd_dimension():
    with pytest.raises(UsageError):
        odd_density_pair(FixedPointData(4, 0, 2, (1.0, 2.0)))
    with pytest.raises(UsageError):
        lhs_density(FixedPointData(3, 0, 0, (1.0,)))
