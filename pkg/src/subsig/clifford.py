"""Graded Clifford algebra Cl(V, q) (x) Cl(V, -q) on blade pairs.

A basis element is a pair of ascending words ``c(e_I) chat(e_J)``.  Both
words are stored in one integer key of ``2n`` bits: bit ``i-1`` marks
``c(e_i)`` and bit ``n+i-1`` marks ``chat(e_i)``.  The canonical word of a
key lists generators in increasing bit order, so c-generators come first
and each half is ascending.

Sign convention
---------------
All ``2n`` generators pairwise anticommute (the graded tensor product
makes every ``c`` anticommute with every ``chat``, including equal
indices).  ``c(e_i)**2 == -1`` and ``chat(e_i)**2 == +1``.  The product of
two blades is therefore

    sign = (-1)**crossings * (-1)**|common c-bits|

where ``crossings`` counts pairs (bit of the left blade above a bit of the
right blade).  The full-word supertrace suite pins this convention.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

from .scalars import (
    RINGS,
    NilPoly,
    RingError,
    coerce,
    magnitude,
    one,
    zero,
)

MAX_SERIES_TERMS = 400


class UsageError(ValueError):
    """Invalid arguments (dimension mismatch, bad bidegree, odd rank...)."""


class ConvergenceError(ArithmeticError):
    """A truncated series failed to converge within its iteration cap."""


class BladePair(NamedTuple):
    """Index sets of a basis word, as bitmasks (bit ``i-1`` is index ``i``)."""

    c_mask: int
    hat_mask: int

    @property
    def c_indices(self) -> tuple[int, ...]:
        return _indices(self.c_mask)

    @property
    def hat_indices(self) -> tuple[int, ...]:
        return _indices(self.hat_mask)


def _indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _mask(indices: Iterable[int], n: int) -> int:
    m = 0
    for i in indices:
        if not 1 <= i <= n:
            raise UsageError(f"index {i} outside 1..{n}")
        m |= 1 << (i - 1)
    return m


def popcount(x: int) -> int:
    return bin(x).count("1")


@lru_cache(maxsize=1 << 16)
def blade_sign(x: int, y: int, n: int) -> int:
    """Sign of ``blade(x) * blade(y)`` relative to ``blade(x ^ y)``."""
    crossings = 0
    a = x >> 1
    while a:
        crossings += popcount(a & y)
        a >>= 1
    c_common = popcount(x & y & ((1 << n) - 1))
    return -1 if (crossings + c_common) & 1 else 1


@lru_cache(maxsize=1 << 16)
def wedge_sign(x: int, y: int) -> int:
    """Sign of ``form(x) ^ form(y)``; zero when the forms overlap."""
    if x & y:
        return 0
    crossings = 0
    a = x >> 1
    while a:
        crossings += popcount(a & y)
        a >>= 1
    return -1 if crossings & 1 else 1


def _key(n: int, c_mask: int, hat_mask: int) -> int:
    return c_mask | (hat_mask << n)


def _split(n: int, key: int) -> BladePair:
    low = (1 << n) - 1
    return BladePair(key & low, key >> n)


def _check_ring(ring: str) -> None:
    if ring not in RINGS:
        raise UsageError(f"unknown ring {ring!r}; expected one of {RINGS}")


class _GradedTerms:
    """Shared storage for Clifford elements and bigraded forms."""

    __slots__ = ("dim", "ring", "ngen", "_terms")

    def __init__(self, dim: int, terms: Mapping[int, Any] | None = None, ring: str = "exact", ngen: int = 0):
        if dim < 0:
            raise UsageError("dimension must be nonnegative")
        _check_ring(ring)
        self.dim = dim
        self.ring = ring
        self.ngen = ngen if ring == "nilpotent" else 0
        limit = 1 << (2 * dim)
        store = {}
        for key, coeff in (terms or {}).items():
            if not 0 <= key < limit:
                raise UsageError(f"blade key {key} does not fit in dimension {dim}")
            c = coerce(coeff, ring, self.ngen)
            if c != 0:
                store[key] = c
        self._terms = dict(sorted(store.items()))

    def _like(self, terms):
        raise NotImplementedError

    def _compatible(self, other: "_GradedTerms") -> None:
        if type(other) is not type(self):
            raise UsageError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.dim != self.dim:
            raise UsageError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if other.ring != self.ring or other.ngen != self.ngen:
            raise RingError(f"ring mismatch: {self.ring} vs {other.ring}")

    @property
    def terms(self) -> dict[BladePair, Any]:
        return {_split(self.dim, k): c for k, c in self._terms.items()}

    def items(self):
        return self._terms.items()

    def coefficient(self, c_indices: Iterable[int] = (), hat_indices: Iterable[int] = ()):
        key = _key(self.dim, _mask(c_indices, self.dim), _mask(hat_indices, self.dim))
        return self._terms.get(key, zero(self.ring, self.ngen))

    def scalar_part(self):
        return self._terms.get(0, zero(self.ring, self.ngen))

    def __len__(self):
        return len(self._terms)

    def __add__(self, other):
        if not isinstance(other, _GradedTerms):
            other = self._like({0: other})
        self._compatible(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out[k] + c if k in out else c
        return self._like(out)

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return self._like({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, _GradedTerms):
            other = self._like({0: other})
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s):
        s = coerce(s, self.ring, self.ngen)
        return self._like({k: c * s for k, c in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, _GradedTerms):
            return (
                type(other) is type(self)
                and other.dim == self.dim
                and other.ring == self.ring
                and other._terms == self._terms
            )
        try:
            return self._terms == self._like({0: other})._terms
        except (RingError, TypeError, UsageError):
            return NotImplemented

    __hash__ = None

    def norm1(self) -> float:
        return math.fsum(magnitude(c) for c in self._terms.values())

    def max_abs_diff(self, other) -> float:
        self._compatible(other)
        keys = set(self._terms) | set(other._terms)
        z = zero(self.ring, self.ngen)
        return max(
            (magnitude(self._terms.get(k, z) - other._terms.get(k, z)) for k in keys),
            default=0.0,
        )


class CliffordElement(_GradedTerms):
    """Element of Cl(V, q) (x)^ Cl(V, -q) with ``dim = n``."""

    __slots__ = ()

    def _like(self, terms):
        return CliffordElement(self.dim, terms, self.ring, self.ngen)

    @classmethod
    def scalar(cls, n: int, value: Any = 1, ring: str = "exact", ngen: int = 0):
        return cls(n, {0: value}, ring, ngen)

    @classmethod
    def word(cls, n: int, c_indices: Sequence[int] = (), hat_indices: Sequence[int] = (),
             coeff: Any = 1, ring: str = "exact", ngen: int = 0):
        """The product ``coeff * c(e_i1)...c(e_ip) chat(e_j1)...chat(e_jq)``.

        Indices may be in any order and may repeat; the product is reduced
        with the Clifford relations.
        """
        out = cls.scalar(n, coeff, ring, ngen)
        for i in c_indices:
            out = out * cls.gen_c(n, i, ring, ngen)
        for j in hat_indices:
            out = out * cls.gen_hat(n, j, ring, ngen)
        return out

    @classmethod
    def gen_c(cls, n: int, i: int, ring: str = "exact", ngen: int = 0):
        return cls(n, {_key(n, _mask([i], n), 0): 1}, ring, ngen)

    @classmethod
    def gen_hat(cls, n: int, i: int, ring: str = "exact", ngen: int = 0):
        return cls(n, {_key(n, 0, _mask([i], n)): 1}, ring, ngen)

    @classmethod
    def from_blades(cls, n: int, blades: Mapping[BladePair | tuple, Any], ring: str = "exact", ngen: int = 0):
        terms = {}
        for bp, c in blades.items():
            cm, hm = bp
            if cm >> n or hm >> n:
                raise UsageError(f"blade {bp} does not fit in dimension {n}")
            terms[_key(n, cm, hm)] = c
        return cls(n, terms, ring, ngen)

    def astype(self, ring: str, ngen: int = 0) -> "CliffordElement":
        if ring == "exact" and self.ring != "exact":
            raise RingError("cannot convert a float/nilpotent element to the exact ring")
        vals = {}
        for k, c in self._terms.items():
            vals[k] = complex(c) if self.ring == "exact" and ring != "exact" else c
        return CliffordElement(self.dim, vals, ring, ngen)

    def __mul__(self, other):
        if isinstance(other, CliffordElement):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = CliffordElement.scalar(self.dim, 1, self.ring, self.ngen)
        for _ in range(k):
            out = out * self
        return out

    def parity(self) -> int | None:
        """0 or 1 if homogeneous, None for mixed parity (zero counts as even)."""
        ps = {popcount(k) & 1 for k in self._terms}
        if len(ps) > 1:
            return None
        return ps.pop() if ps else 0

    def __repr__(self):
        return f"CliffordElement(dim={self.dim}, ring={self.ring!r}, {to_text(self)})"


def mul(x: CliffordElement, y: CliffordElement) -> CliffordElement:
    """Bilinear associative product of two Clifford elements."""
    x._compatible(y)
    n = x.dim
    out: dict[int, Any] = {}
    for kx, cx in x._terms.items():
        for ky, cy in y._terms.items():
            s = blade_sign(kx, ky, n)
            k = kx ^ ky
            v = cx * cy
            if s < 0:
                v = -v
            out[k] = out[k] + v if k in out else v
    return CliffordElement(n, out, x.ring, x.ngen)


def supercommutator(x: CliffordElement, y: CliffordElement) -> CliffordElement:
    """``[x, y]_s`` extended bilinearly over homogeneous blade components."""
    x._compatible(y)
    out = CliffordElement(x.dim, {}, x.ring, x.ngen)
    for kx, cx in x._terms.items():
        bx = CliffordElement(x.dim, {kx: cx}, x.ring, x.ngen)
        for ky, cy in y._terms.items():
            by = CliffordElement(y.dim, {ky: cy}, y.ring, y.ngen)
            sgn = -1 if (popcount(kx) & 1) and (popcount(ky) & 1) else 1
            out = out + bx * by - (by * bx).scale(sgn)
    return out


class BigradedForm(_GradedTerms):
    """Element of Lambda(n) (x)^ Lambda(n), optionally split at ``a``.

    Keys follow the same bit layout as :class:`CliffordElement`: bit
    ``i-1`` is ``e^i`` and bit ``n+i-1`` is the hatted ``e^i``.  The
    split ``a`` separates tangential indices ``1..a`` from normal indices
    ``a+1..n`` for the ``(k, l)`` bigrading.
    """

    __slots__ = ("split",)

    def __init__(self, dim: int, terms=None, ring: str = "exact", ngen: int = 0, split: int = 0):
        super().__init__(dim, terms, ring, ngen)
        if not 0 <= split <= dim:
            raise UsageError(f"split a={split} outside 0..{dim}")
        self.split = split

    def _like(self, terms):
        return BigradedForm(self.dim, terms, self.ring, self.ngen, self.split)

    def _compatible(self, other):
        super()._compatible(other)
        if other.split != self.split:
            raise UsageError(f"split mismatch: {self.split} vs {other.split}")

    def with_split(self, a: int) -> "BigradedForm":
        return BigradedForm(self.dim, self._terms, self.ring, self.ngen, a)

    def wedge(self, other: "BigradedForm") -> "BigradedForm":
        self._compatible(other)
        out: dict[int, Any] = {}
        for kx, cx in self._terms.items():
            for ky, cy in other._terms.items():
                s = wedge_sign(kx, ky)
                if not s:
                    continue
                v = cx * cy if s > 0 else -(cx * cy)
                k = kx | ky
                out[k] = out[k] + v if k in out else v
        return self._like(out)

    def __mul__(self, other):
        if isinstance(other, BigradedForm):
            return self.wedge(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def bidegree(self, key: int) -> tuple[tuple[int, int], tuple[int, int]]:
        n, a = self.dim, self.split
        tan = (1 << a) - 1
        nor = ((1 << n) - 1) ^ tan
        cm, hm = _split(n, key)
        return (popcount(cm & tan), popcount(cm & nor)), (popcount(hm & tan), popcount(hm & nor))

    def __repr__(self):
        return f"BigradedForm(dim={self.dim}, split={self.split}, {to_text(self, hat='ê', plain='e')})"


def wedge_exp(w: BigradedForm) -> BigradedForm:
    """Exterior exponential; terminates because even forms are nilpotent."""
    if any(popcount(k) & 1 for k in w._terms):
        raise UsageError("wedge_exp needs an even form")
    if w.scalar_part() != 0:
        raise UsageError("wedge_exp needs a form with no scalar part")
    out = w._like({0: 1})
    term = w._like({0: 1})
    for m in range(1, 2 * w.dim + 1):
        term = term.wedge(w).scale(Fraction(1, m) if w.ring == "exact" else 1.0 / m)
        if not term:
            break
        out = out + term
    return out


# -- operations on elements ------------------------------------------------


def build_chat_E(n: int, k: int, ring: str = "exact", ngen: int = 0) -> CliffordElement:
    """``chat(f_1)...chat(f_k)`` with the frame convention ``f_alpha = e_alpha``."""
    if not 0 <= k <= n:
        raise UsageError(f"need 0 <= k <= n, got k={k}, n={n}")
    return CliffordElement(n, {_key(n, 0, (1 << k) - 1): 1}, ring, ngen)


@dataclass(frozen=True)
class TauElement:
    """``tau = eps * chat(E)``: the grading flag paired with the chat-word.

    The grading operator is not stored as a Clifford word; identities
    involving tau are evaluated in the exterior-algebra representation
    (see :func:`subsig.matrix_rep.rep_tau`).
    """

    n: int
    k: int
    chat_E: CliffordElement = field(repr=False)
    grading: bool = True

    @property
    def expected_square_sign(self) -> int:
        return -1 if (self.k * (self.k + 1) // 2) % 2 else 1


def build_tau(n: int, k: int) -> TauElement:
    return TauElement(n, k, build_chat_E(n, k))


def grading_element(n: int, ring: str = "exact", ngen: int = 0) -> CliffordElement:
    """The Clifford element acting as ``(-1)**degree`` on Lambda(V).

    Each factor ``-c(e_i) chat(e_i)`` is ``+1`` on forms without ``e^i``
    and ``-1`` on forms containing it.
    """
    out = CliffordElement.scalar(n, 1, ring, ngen)
    for i in range(1, n + 1):
        out = out * reflection_lift(n, i, ring, ngen)
    return out


def reflection_lift(n: int, i: int, ring: str = "exact", ngen: int = 0) -> CliffordElement:
    """Lift of the reflection ``e_i -> -e_i`` to Lambda(V): ``-c(e_i) chat(e_i)``."""
    return CliffordElement(n, {_key(n, 1 << (i - 1), 1 << (i - 1)): -1}, ring, ngen)


def symbol(x: CliffordElement, split: int = 0) -> BigradedForm:
    """Replace each canonical blade by the corresponding form word."""
    return BigradedForm(x.dim, x._terms, x.ring, x.ngen, split)


def quantize(w: BigradedForm) -> CliffordElement:
    """Inverse of :func:`symbol` on canonical blades."""
    return CliffordElement(w.dim, w._terms, w.ring, w.ngen)


def berezin_T(w: BigradedForm):
    """Coefficient of ``e^1...e^n ê^1...ê^n``."""
    full = (1 << (2 * w.dim)) - 1
    return w._terms.get(full, zero(w.ring, w.ngen))


def supertrace_sign(n: int) -> int:
    return -1 if (n * (n + 1) // 2) % 2 else 1


def supertrace(x: CliffordElement):
    """Supertrace via ``(-1)**(n(n+1)/2) * 2**n * T(symbol(x))``."""
    t = berezin_T(symbol(x))
    return t * (supertrace_sign(x.dim) * 2**x.dim)


def trace(x: CliffordElement):
    """Ordinary trace on Lambda(V): only the identity blade is not traceless."""
    return x.scalar_part() * 2**x.dim


def bigraded_component(w: BigradedForm, deg1: tuple[int, int], deg2: tuple[int, int]) -> BigradedForm:
    """Projection onto the ``((k1, l1), (k2, l2))`` component for ``w.split``."""
    a, b = w.split, w.dim - w.split
    for (k, l) in (deg1, deg2):
        if not (0 <= k <= a and 0 <= l <= b):
            raise UsageError(f"bidegree {(deg1, deg2)} out of range for a={a}, b={b}")
    target = (tuple(deg1), tuple(deg2))
    return w._like({k: c for k, c in w._terms.items() if w.bidegree(k) == target})


def clifford_exp(x: CliffordElement, tol: float = 1e-15) -> CliffordElement:
    """Power series ``sum x**m / m!`` by scaling and squaring.

    Float and nilpotent rings only.  Nilpotent parts terminate on their
    own; the numeric part is truncated once a term's 1-norm drops below
    ``tol`` relative to the running sum.
    """
    if x.ring == "exact":
        raise UsageError("clifford_exp needs the float or nilpotent ring")
    nrm = x.norm1()
    squarings = 0
    while nrm > 0.5:
        nrm /= 2
        squarings += 1
    y = x.scale(0.5**squarings)
    out = CliffordElement.scalar(x.dim, 1, x.ring, x.ngen)
    term = out
    for m in range(1, MAX_SERIES_TERMS + 1):
        term = (term * y).scale(1.0 / m)
        if not term:
            break
        out = out + term
        if term.norm1() <= tol * max(1.0, out.norm1()):
            break
    else:
        raise ConvergenceError(f"clifford_exp did not converge in {MAX_SERIES_TERMS} terms")
    for _ in range(squarings):
        out = out * out
    return out


def rotation_lift(angles: Sequence[float], n: int, a: int = 0, ring: str = "float", ngen: int = 0,
                  reflect_last: bool = False) -> CliffordElement:
    """Lift of the normal rotation to Lambda(V) as a Clifford element.

    Plane ``j`` (0-based) spans ``e_{a+2j+1}, e_{a+2j+2}``.  Each factor is

        ((1 + cos t) - (1 - cos t) c c chat chat + sin t (c c - chat chat)) / 2

    With ``reflect_last`` the normal rank is odd and ``e_n`` is reflected,
    contributing the extra factor ``-c_n chat_n``.
    """
    b = n - a - int(reflect_last)
    if b < 0 or b % 2:
        raise UsageError(f"normal rank {n - a} has the wrong parity for this lift")
    if len(angles) != b // 2:
        raise UsageError(f"need {b // 2} angles for b={b}, got {len(angles)}")
    if ring == "exact":
        raise UsageError("rotation_lift needs the float or nilpotent ring")
    out = CliffordElement.scalar(n, 1, ring, ngen)
    for j, t in enumerate(angles):
        p, q = a + 2 * j + 1, a + 2 * j + 2
        cc = _key(n, _mask([p, q], n), 0)
        hh = _key(n, 0, _mask([p, q], n))
        cos_t, sin_t = math.cos(t), math.sin(t)
        factor = CliffordElement(
            n,
            {0: 0.5 * (1 + cos_t), cc | hh: -0.5 * (1 - cos_t), cc: 0.5 * sin_t, hh: -0.5 * sin_t},
            ring,
            ngen,
        )
        out = out * factor
    if reflect_last:
        out = out * reflection_lift(n, n, ring, ngen)
    return out


def quadratic_hat(matrix, indices: Sequence[int], n: int, ring: str = "float", ngen: int = 0,
                  scale: float = 0.25) -> CliffordElement:
    """``scale * sum_{a,b} M[a,b] chat(e_{indices[a]}) chat(e_{indices[b]})``."""
    m = len(indices)
    out = CliffordElement(n, {}, ring, ngen)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            coeff = matrix[i][j]
            if coeff == 0:
                continue
            out = out + CliffordElement.word(n, (), (indices[i], indices[j]), coeff, ring, ngen).scale(scale)
    return out


def exp_block_closed_form(angles_half: Sequence[float], planes: Sequence[tuple[int, int]], n: int,
                          ring: str = "float", ngen: int = 0) -> CliffordElement:
    """``prod_j (cos x_j + sin x_j chat_p chat_q)`` = exp(sum x_j chat_p chat_q)."""
    out = CliffordElement.scalar(n, 1, ring, ngen)
    for x, (p, q) in zip(angles_half, planes):
        f = CliffordElement(n, {0: math.cos(x), _key(n, 0, _mask([p, q], n)): math.sin(x)}, ring, ngen)
        out = out * f
    return out


# -- text serialization ----------------------------------------------------


def _fmt_coeff(c) -> str:
    if isinstance(c, NilPoly):
        return repr(c)
    if isinstance(c, complex):
        if c.imag == 0:
            return repr(c.real)
        return repr(c)
    return str(c)


def to_text(x: _GradedTerms, hat: str = "ĉ", plain: str = "c") -> str:
    """Canonical text ``coeff * c[i..] ^ ĉ[j..]`` terms joined by `` + ``."""
    if not x._terms:
        return "0"
    parts = []
    for key, c in x._terms.items():
        bp = _split(x.dim, key)
        ci = ",".join(map(str, bp.c_indices))
        hi = ",".join(map(str, bp.hat_indices))
        parts.append(f"{_fmt_coeff(c)} * {plain}[{ci}] ^ {hat}[{hi}]")
    return " + ".join(parts)
