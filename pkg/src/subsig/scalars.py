"""Coefficient rings for Clifford elements and characteristic forms.

Three rings are supported, identified by a short tag:

``"exact"``
    Gaussian rationals (:class:`GaussianRational`), for sign and
    combinatorial identities that must hold exactly.
``"float"``
    Python ``complex``, for closed forms involving cos/sin of angles.
``"nilpotent"``
    :class:`NilPoly`, polynomials in commuting generators with
    ``eps_i**2 == 0`` and complex coefficients.  Each generator stands for
    a 2-form, so every power series in a NilPoly terminates.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from numbers import Rational
from typing import Any, Iterable

RINGS = ("exact", "float", "nilpotent")


class RingError(ValueError):
    """Raised when operands live in incompatible rings."""


class GaussianRational:
    """Exact complex number ``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Any = 0, im: Any = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value: Any) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Rational)):
            return cls(value)
        if isinstance(value, complex):
            raise RingError("refusing to coerce a float complex into an exact ring")
        if isinstance(value, float):
            raise RingError("refusing to coerce a float into an exact ring")
        raise TypeError(f"cannot coerce {type(value).__name__} to GaussianRational")

    def _other(self, other):
        try:
            return GaussianRational.coerce(other)
        except (RingError, TypeError):
            return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("GaussianRational division by zero")
        num = self * GaussianRational(o.re, -o.im)
        return GaussianRational(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return GaussianRational(1) / self ** (-k)
        out = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


class NilPoly:
    """Polynomial in commuting square-zero generators ``eps_0..eps_{m-1}``.

    Monomials are bitmasks; ``eps_S * eps_T`` is ``eps_{S|T}`` when the
    masks are disjoint and zero otherwise.  Coefficients are complex.
    Zero coefficients are dropped exactly, never by tolerance.
    """

    __slots__ = ("ngen", "terms")

    def __init__(self, ngen: int, terms: dict[int, complex] | None = None):
        self.ngen = ngen
        self.terms: dict[int, complex] = {}
        if terms:
            for mask, coeff in terms.items():
                if mask >> ngen:
                    raise ValueError(f"monomial {mask:b} exceeds {ngen} generators")
                c = complex(coeff)
                if c != 0:
                    self.terms[mask] = c

    @classmethod
    def const(cls, ngen: int, value: Any) -> "NilPoly":
        return cls(ngen, {0: complex(value)})

    @classmethod
    def gen(cls, ngen: int, i: int, coeff: Any = 1) -> "NilPoly":
        if not 0 <= i < ngen:
            raise IndexError(f"generator {i} out of range for {ngen} generators")
        return cls(ngen, {1 << i: complex(coeff)})

    def _other(self, other) -> "NilPoly | None":
        if isinstance(other, NilPoly):
            if other.ngen != self.ngen:
                raise RingError(
                    f"nilpotent rings differ: {self.ngen} vs {other.ngen} generators"
                )
            return other
        if isinstance(other, GaussianRational):
            return NilPoly.const(self.ngen, complex(other))
        if isinstance(other, (int, float, complex, Rational)):
            return NilPoly.const(self.ngen, complex(other))
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, 0) + c
        return NilPoly(self.ngen, out)

    __radd__ = __add__

    def __neg__(self):
        return NilPoly(self.ngen, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        out: dict[int, complex] = {}
        for m1, c1 in sorted(self.terms.items()):
            for m2, c2 in sorted(o.terms.items()):
                if m1 & m2:
                    continue
                m = m1 | m2
                out[m] = out.get(m, 0) + c1 * c2
        return NilPoly(self.ngen, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, NilPoly):
            return self * other.reciprocal()
        if isinstance(other, (int, float, complex, Rational, GaussianRational)):
            return self * (1 / complex(other))
        return NotImplemented

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = NilPoly.const(self.ngen, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, NilPoly) and other.ngen != self.ngen:
            return False
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        return hash((self.ngen, tuple(sorted(self.terms.items()))))

    def __bool__(self):
        return bool(self.terms)

    def __abs__(self):
        # l1 norm over monomials: submultiplicative, so it bounds series tails
        return math.fsum(abs(c) for c in self.terms.values())

    @property
    def constant(self) -> complex:
        return self.terms.get(0, 0j)

    def nilpart(self) -> "NilPoly":
        return NilPoly(self.ngen, {m: c for m, c in self.terms.items() if m})

    def coefficient(self, mask: int) -> complex:
        return self.terms.get(mask, 0j)

    def top(self) -> complex:
        """Coefficient of the product of all generators."""
        return self.terms.get((1 << self.ngen) - 1, 0j)

    def degree_part(self, d: int) -> "NilPoly":
        return NilPoly(
            self.ngen, {m: c for m, c in self.terms.items() if bin(m).count("1") == d}
        )

    def scale_generators(self, factor: complex) -> "NilPoly":
        """Substitute ``eps_i -> factor * eps_i`` for every generator."""
        return NilPoly(
            self.ngen,
            {m: c * factor ** bin(m).count("1") for m, c in self.terms.items()},
        )

    def _apply_series(self, f0: complex, derivs: Iterable[complex]) -> "NilPoly":
        # f(c + N) = sum_j f^{(j)}(c) N^j / j!, exact because N^{ngen+1} == 0
        n = self.nilpart()
        out = NilPoly.const(self.ngen, f0)
        power = NilPoly.const(self.ngen, 1)
        for j, d in enumerate(derivs, start=1):
            power = power * n
            if not power:
                break
            out = out + power * (d / math.factorial(j))
        return out

    def exp(self) -> "NilPoly":
        e = cmath.exp(self.constant)
        return self._apply_series(e, (e for _ in range(self.ngen)))

    def log(self) -> "NilPoly":
        c = self.constant
        if c == 0:
            raise ZeroDivisionError("log of a nilpotent element")
        derivs = ((-1) ** (j - 1) * math.factorial(j - 1) / c**j for j in range(1, self.ngen + 1))
        return self._apply_series(cmath.log(c), derivs)

    def reciprocal(self) -> "NilPoly":
        c = self.constant
        if c == 0:
            raise ZeroDivisionError("reciprocal of a nilpotent element")
        derivs = ((-1) ** j * math.factorial(j) / c ** (j + 1) for j in range(1, self.ngen + 1))
        return self._apply_series(1 / c, derivs)

    def sqrt(self) -> "NilPoly":
        """Principal square root (branch fixed by the constant term)."""
        c = self.constant
        if c == 0:
            raise ZeroDivisionError("sqrt of a nilpotent element")
        return (self.log() * 0.5).exp()

    def __repr__(self):
        if not self.terms:
            return f"NilPoly({self.ngen}, 0)"
        parts = []
        for m, c in sorted(self.terms.items()):
            mono = "*".join(f"eps{i}" for i in range(self.ngen) if m >> i & 1)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return f"NilPoly({self.ngen}, " + " + ".join(parts) + ")"


def ring_of(value: Any) -> str:
    if isinstance(value, NilPoly):
        return "nilpotent"
    if isinstance(value, (GaussianRational, int, Rational)) and not isinstance(value, bool):
        return "exact"
    if isinstance(value, (float, complex)):
        return "float"
    raise TypeError(f"unsupported scalar type {type(value).__name__}")


def coerce(value: Any, ring: str, ngen: int = 0):
    """Convert ``value`` into an element of ``ring``."""
    if ring == "exact":
        return GaussianRational.coerce(value)
    if ring == "float":
        if isinstance(value, NilPoly):
            raise RingError("cannot coerce a NilPoly into the float ring")
        return complex(value)
    if ring == "nilpotent":
        if isinstance(value, NilPoly):
            if value.ngen != ngen:
                raise RingError(f"expected {ngen} generators, got {value.ngen}")
            return value
        return NilPoly.const(ngen, complex(value))
    raise ValueError(f"unknown ring {ring!r}; expected one of {RINGS}")


def zero(ring: str, ngen: int = 0):
    return coerce(0, ring, ngen)


def one(ring: str, ngen: int = 0):
    return coerce(1, ring, ngen)


def magnitude(value: Any) -> float:
    """Max-abs size used for series truncation and error reporting."""
    return float(abs(value))


def to_complex(value: Any) -> complex:
    if isinstance(value, NilPoly):
        raise RingError("NilPoly has no single complex value; extract a coefficient")
    return complex(value)


def scalar_exp(value: Any):
    if isinstance(value, NilPoly):
        return value.exp()
    return cmath.exp(complex(value))


def scalar_log(value: Any):
    if isinstance(value, NilPoly):
        return value.log()
    return cmath.log(complex(value))
