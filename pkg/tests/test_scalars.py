import cmath
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from subsig.scalars import GaussianRational, NilPoly, RingError, coerce, magnitude

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=20)
gaussians = st.builds(GaussianRational, fractions, fractions)


@given(gaussians, gaussians, gaussians)
def test_gaussian_field_axioms(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x
    if y:
        assert (x / y) * y == x


def test_gaussian_i_squared():
    i = GaussianRational(0, 1)
    assert i * i == -1
    assert i**4 == 1
    assert i**-1 == -i


def test_gaussian_refuses_floats():
    with pytest.raises(RingError):
        GaussianRational.coerce(0.5)
    with pytest.raises(RingError):
        coerce(1j, "exact")


def test_gaussian_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        GaussianRational(1) / GaussianRational(0)


def test_nilpotent_generators_square_to_zero():
    e0 = NilPoly.gen(3, 0)
    e1 = NilPoly.gen(3, 1)
    assert not e0 * e0
    assert (e0 * e1).terms == {0b11: 1}
    assert e0 * e1 == e1 * e0


def test_nilpotent_exp_terminates():
    x = NilPoly.gen(2, 0, 2.0) + NilPoly.gen(2, 1, -1.0)
    # exp(2 e0 - e1) = (1 + 2 e0)(1 - e1)
    assert x.exp() == NilPoly(2, {0: 1, 1: 2, 2: -1, 3: -2})


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.2, 4))
def test_nilpotent_log_inverts_exp(coeffs, c0):
    x = NilPoly(2, {0: c0, 1: coeffs[0], 2: coeffs[1], 3: coeffs[2]})
    back = x.log().exp()
    assert magnitude(back - x) < 1e-10 * max(1.0, magnitude(x))


def test_nilpotent_reciprocal_and_sqrt():
    x = NilPoly(2, {0: 4, 1: 1, 2: 2})
    assert magnitude(x * x.reciprocal() - 1) < 1e-14
    r = x.sqrt()
    assert magnitude(r * r - x) < 1e-14
    assert cmath.isclose(r.constant, 2)


def test_nilpotent_rings_must_match():
    with pytest.raises(RingError):
        NilPoly.gen(2, 0) + NilPoly.gen(3, 0)
    assert NilPoly(2) != NilPoly(3)


def test_nilpotent_top_and_scaling():
    x = NilPoly(2, {0: 1, 3: 5})
    assert x.top() == 5
    assert x.scale_generators(2).top() == 20
    assert x.degree_part(2) == NilPoly(2, {3: 5})


def test_coerce_roundtrip():
    assert coerce(Fraction(1, 3), "exact") == GaussianRational(Fraction(1, 3))
    assert coerce(2, "nilpotent", 2) == NilPoly.const(2, 2)
    with pytest.raises(ValueError):
        coerce(1, "quaternion")
