"""Both sides of the local equivariant index density at fixed-point data.

Frame: ``f_alpha = e_alpha`` for ``alpha <= k`` spans ``E`` and
``h_s = e_{k+s}`` spans ``E^perp``.  The fixed set is tangent to
``e_1..e_a``; normal plane ``j`` is ``(e_{a+2j+1}, e_{a+2j+2})``, and for
odd ``n`` the last direction ``e_n`` is reflected.

Curvature enters as a full ``n x n`` antisymmetric matrix ``R`` in the
row convention used throughout: a quadratic element is
``1/4 sum M[i, j] chat_i chat_j``.  In the ``"nilpotent"`` ring every
entry of ``R`` is a :class:`~subsig.scalars.NilPoly` in ``a/2``
generators, generator ``i`` standing for the tangent 2-form
``e^{2i+1} ^ e^{2i+2}``; the ``(a, 0)`` component is then the top monomial.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import forms
from .clifford import (
    BigradedForm,
    CliffordElement,
    UsageError,
    _key,
    _mask,
    bigraded_component,
    build_chat_E,
    clifford_exp,
    grading_element,
    quadratic_hat,
    rotation_lift,
    supertrace,
    supertrace_sign,
    symbol,
    trace,
)
from .forms import GroupElement, SingularityError
from .scalars import NilPoly, magnitude

TWO_PI = 2 * math.pi


def _zeros(size: int, ring: str, ngen: int) -> np.ndarray:
    if ring == "nilpotent":
        return np.full((size, size), NilPoly(ngen), dtype=object)
    return np.zeros((size, size))


@dataclass(frozen=True)
class FixedPointData:
    """Pointwise data at a fixed point ``x0`` of ``phi``.

    ``curvature`` is the full ``n x n`` Riemann curvature matrix at ``x0``
    (zero by default).  It must preserve the ``E / E^perp`` split and the
    tangent/normal split, and its normal block must commute with
    ``phi^N``.
    """

    n: int
    a: int
    k: int
    phi_angles: tuple[float, ...]
    ring: str = "float"
    curvature: Any = None
    tol: float = 1e-12
    _R: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, a, k = self.n, self.a, self.k
        if n < 1 or not 0 <= a <= n:
            raise UsageError(f"need 0 <= a <= n, got n={n}, a={a}")
        if k % 2 or a % 2:
            raise UsageError("k and a must be even")
        if not 0 <= k < n:
            raise UsageError(f"rank k={k} must satisfy 0 <= k < n={n} so that E^perp is nonzero")
        if (n - a - int(self.odd)) // 2 != len(self.phi_angles):
            raise UsageError(f"need {(n - a) // 2} rotation angles, got {len(self.phi_angles)}")
        if self.ring not in ("float", "nilpotent"):
            raise UsageError("densities use the float or nilpotent ring")
        if self.ring == "float" and a:
            raise UsageError("a > 0 needs the nilpotent ring to carry the fixed-set form degree")
        angles = tuple(float(t) % TWO_PI for t in self.phi_angles)
        for t in angles:
            if min(t, TWO_PI - t) < 1e-9:
                raise SingularityError("degenerate normal rotation: an angle is 0 mod 2pi")
        object.__setattr__(self, "phi_angles", angles)
        R = self.curvature
        R = _zeros(n, self.ring, self.ngen) if R is None else np.array(R, dtype=object if self.ring == "nilpotent" else float)
        if R.shape != (n, n):
            raise UsageError(f"curvature must be {n}x{n}")
        object.__setattr__(self, "_R", R)
        self._validate_curvature()

    @property
    def odd(self) -> bool:
        return self.n % 2 == 1

    @property
    def b(self) -> int:
        return self.n - self.a

    @property
    def ngen(self) -> int:
        return self.a // 2 if self.ring == "nilpotent" else 0

    def _validate_curvature(self) -> None:
        R, n, a, k, tol = self._R, self.n, self.a, self.k, self.tol
        if self.ring == "nilpotent":
            for v in R.ravel():
                if not isinstance(v, NilPoly) or v.ngen != self.ngen:
                    raise UsageError(f"nilpotent curvature entries need {self.ngen} generators")
                if v.constant != 0:
                    raise UsageError("curvature entries are 2-forms and must have no constant term")
        for i in range(n):
            for j in range(n):
                if magnitude(R[i, j] + R[j, i]) > tol:
                    raise UsageError("curvature is not antisymmetric")
                crosses_e = (i < k) != (j < k)
                crosses_fixed = (i < a) != (j < a)
                if (crosses_e or crosses_fixed) and magnitude(R[i, j]) > tol:
                    raise UsageError(f"curvature entry ({i + 1}, {j + 1}) breaks the E or fixed-set split")
        normal = R[a:, a:]
        phi = self.group.matrix()
        if self.ring == "float":
            if np.abs(phi @ normal - normal @ phi).max(initial=0.0) > 1e-9:
                raise UsageError("normal curvature does not commute with phi^N")
        else:
            comm = phi.astype(object) @ normal - normal @ phi.astype(object)
            if max((magnitude(v) for v in comm.ravel()), default=0.0) > 1e-9:
                raise UsageError("normal curvature does not commute with phi^N")

    @property
    def group(self) -> GroupElement:
        return GroupElement(self.phi_angles, reflection=self.odd)

    @property
    def A(self) -> np.ndarray:
        """Block log of ``phi'(0) = diag(1_a, phi^N)``; the reflected line gets 0."""
        out = np.zeros((self.n, self.n))
        out[self.a :, self.a :] = self.group.log()
        return out

    @property
    def L1(self) -> np.ndarray:
        return self.A[: self.k, : self.k]

    @property
    def L2(self) -> np.ndarray:
        return self.A[self.k :, self.k :]

    @property
    def R(self) -> np.ndarray:
        return self._R

    @property
    def RE(self) -> np.ndarray:
        return self._R[: self.k, : self.k]

    @property
    def REperp(self) -> np.ndarray:
        return self._R[self.k :, self.k :]

    @property
    def Rprime(self) -> np.ndarray:
        return self._R[: self.a, : self.a]

    @property
    def Rdoubleprime(self) -> np.ndarray:
        return self._R[self.a :, self.a :]

    def scalar(self, value):
        return NilPoly.const(self.ngen, value) if self.ring == "nilpotent" else complex(value)


def random_fixed_point(n: int, a: int, k: int, rng: np.random.Generator, ring: str | None = None,
                       margin: float = 0.2, curvature_scale: float = 1.0) -> FixedPointData:
    """Nondegenerate random data; curvature is random block-aligned 2-forms when ``a > 0``."""
    ring = ring or ("nilpotent" if a else "float")
    nplanes = (n - a) // 2
    angles = tuple(rng.uniform(margin, TWO_PI - margin) for _ in range(nplanes))
    R = None
    if ring == "nilpotent":
        ngen = a // 2
        R = _zeros(n, ring, ngen)

        def form():
            return NilPoly(ngen, {1 << i: curvature_scale * rng.normal() for i in range(ngen)})

        # tangent block: random antisymmetric matrix of 2-forms inside the E split
        for i in range(a):
            for j in range(i + 1, a):
                if (i < k) == (j < k):
                    v = form()
                    R[i, j], R[j, i] = v, -v
        # normal block: one 2-form per rotation plane
        for p in range(nplanes):
            i = a + 2 * p
            v = form()
            R[i + 1, i], R[i, i + 1] = v, -v
    return FixedPointData(n, a, k, angles, ring, R)


# -- Clifford-side building blocks ---------------------------------------------


@dataclass(frozen=True)
class CurvatureElements:
    Rdot: CliffordElement
    Rddot: CliffordElement
    RdotTilde: CliffordElement
    RddotTilde: CliffordElement


def curvature_elements(data: FixedPointData, t: float = 1.0) -> CurvatureElements:
    n, k, ring, ngen = data.n, data.k, data.ring, data.ngen
    f = list(range(1, k + 1))
    h = list(range(k + 1, n + 1))

    def quad(m, idx):
        return quadratic_hat(_scaled(m, t), idx, n, ring, ngen)

    return CurvatureElements(
        Rdot=quad(data.RE, f),
        Rddot=quad(data.REperp, h),
        RdotTilde=quad(data.RE - data.L1, f),
        RddotTilde=quad(data.REperp - data.L2, h),
    )


def _scaled(m: np.ndarray, s: float) -> np.ndarray:
    if m.dtype == object:
        out = np.empty_like(m)
        for idx, v in np.ndenumerate(m):
            out[idx] = v * s
        return out
    return m * s


def phi_lift(data: FixedPointData) -> CliffordElement:
    return rotation_lift(data.phi_angles, data.n, data.a, data.ring, data.ngen, reflect_last=data.odd)


def symbol_expansion_lift(data: FixedPointData, l2: int) -> tuple[BigradedForm, BigradedForm]:
    """Bidegree ``((0, b), (0, l2))`` part of the symbol of the rotation lift, two ways.

    Left: read off the blade expansion of the lift.  Right:
    ``2^{-b/2} e^{a+1} ^ ... ^ e^n det^{1/2}(1 - phi^N)`` times the
    ``(0, l2)`` part of ``sigma[exp(-1/4 sum A_ij chat_i chat_j)]``.
    """
    if data.odd:
        raise UsageError("symbol expansion is for the even case")
    n, a, b = data.n, data.a, data.b
    if l2 < 0:
        raise UsageError("l2 must be nonnegative")
    lift = phi_lift(data)
    left = bigraded_component(symbol(lift, a), (0, b), (0, l2)) if l2 <= b else BigradedForm(n, {}, data.ring, data.ngen, a)
    det_half = forms.det_sqrt_1_minus(data.group)
    normal_top = CliffordElement.word(n, tuple(range(a + 1, n + 1)), (), 1, data.ring, data.ngen)
    A = data.A
    split = quadratic_hat(-A[:data.k, :data.k], list(range(1, data.k + 1)), n, data.ring, data.ngen) \
        + quadratic_hat(-A[data.k:, data.k:], list(range(data.k + 1, n + 1)), n, data.ring, data.ngen)
    expo = symbol(clifford_exp(split), a)
    hat_part = bigraded_component(expo, (0, 0), (0, l2)) if l2 <= b else BigradedForm(n, {}, data.ring, data.ngen, a)
    right = symbol(normal_top, a).wedge(hat_part).scale(det_half * 0.5 ** (b // 2))
    return left, right


def _top_hat_coefficient(x: CliffordElement):
    """Coefficient of ``chat_1 ... chat_n`` (the top Berezin coefficient of the symbol)."""
    return x.coefficient((), range(1, x.dim + 1))


def lemma_berezin_lhs(ME, MEperp) -> complex:
    """Top ``chat``-coefficient of ``chat(f_1..f_k) exp(1/4 sum M chat chat)``.

    ``ME`` acts on ``f_1..f_k`` and ``MEperp`` on ``h_1..h_{n-k}`` (the
    matrices play the role of ``R - L``).
    """
    ME, MEperp = np.asarray(ME, dtype=float), np.asarray(MEperp, dtype=float)
    k, m = ME.shape[0], MEperp.shape[0]
    n = k + m
    q = quadratic_hat(ME, list(range(1, k + 1)), n) + quadratic_hat(MEperp, list(range(k + 1, n + 1)), n)
    x = build_chat_E(n, k, "float") * clifford_exp(q)
    return _top_hat_coefficient(x)


def lemma_berezin_rhs(ME, MEperp, method: str = "chern") -> complex:
    """``(-1)^{(n-k)/2} det^{1/2}cosh(ME/2) det^{1/2}sinhc(MEperp/2) Pf(MEperp/2)``."""
    ME, MEperp = np.asarray(ME, dtype=float), np.asarray(MEperp, dtype=float)
    m = MEperp.shape[0]
    pf_method = "chern" if method == "chern" else "berezin"
    return ((-1) ** (m // 2) * forms.det_sqrt_cosh(ME, method) * forms.det_sqrt_sinhc(MEperp, method)
            * forms.pfaffian(MEperp / 2, pf_method))


def lemma_3_19_lhs(data: FixedPointData, hat_angles: Sequence[float] | None = None) -> complex:
    ME, MEperp = _lemma_matrices(data, hat_angles)
    return lemma_berezin_lhs(ME, MEperp)


def lemma_3_19_rhs(data: FixedPointData, hat_angles: Sequence[float] | None = None) -> complex:
    ME, MEperp = _lemma_matrices(data, hat_angles)
    return lemma_berezin_rhs(ME, MEperp)


def _lemma_matrices(data: FixedPointData, hat_angles):
    if data.ring != "float" or data.odd:
        raise UsageError("the Berezin lemma check runs on even float data")
    if hat_angles is None:
        return data.RE - data.L1, data.REperp - data.L2
    # explicit Chern angles: first k/2 act on E, the rest on E^perp
    k = data.k
    angles = list(hat_angles)
    if len(angles) != data.n // 2:
        raise UsageError(f"need {data.n // 2} hat angles")
    return forms.block_matrix(angles[: k // 2]), forms.block_matrix(angles[k // 2 :])


# -- Mehler value and the two densities ----------------------------------------


@dataclass(frozen=True)
class MehlerValue:
    """Model heat-kernel value at the fixed point, split into its factors."""

    prefactor: Any
    chat_factor: CliffordElement
    exp_factor: CliffordElement

    def element(self) -> CliffordElement:
        return (self.chat_factor * self.exp_factor).scale(self.prefactor)


def mehler_prefactor(data: FixedPointData, t: float = 1.0):
    """``(4 pi t)^{-a/2} det^{-1/2}(1-phi^N) det^{1/2}((tR'/2)/sinh(tR'/2)) det^{-1/2}(1-phi^N e^{-tR''})``.

    Evaluated on the series route with a direct determinant for the
    constant part, so it shares nothing with the Chern-root closed forms.
    """
    if t <= 0:
        raise UsageError("t must be positive")
    vol = forms.NORMALIZATION["heat_volume"] * t
    base = vol ** (-data.a / 2) / forms.det_sqrt_1_minus(data.group)
    tangent = forms.a_hat(_scaled(data.Rprime, TWO_PI * t), method="series") if data.a else 1.0
    normal = forms.nu_phi(data.group, _scaled(data.Rdoubleprime, TWO_PI * t), method="series")
    return data.scalar(base) * tangent * normal


def mehler_value(data: FixedPointData, t: float = 1.0) -> MehlerValue:
    """Model kernel value with ``(sqrt(-1))^{k/2} chat(E)`` kept as a separate factor.

    The exponential carries the curvature part ``t(Rdot + Rddot)`` only:
    the rotation part ``-L`` is supplied by the lift of ``phi`` when the
    factors are composed.
    """
    el = curvature_elements(data, t)
    chat = build_chat_E(data.n, data.k, data.ring, data.ngen).scale(1j ** (data.k // 2))
    expo = clifford_exp(el.Rdot + el.Rddot)
    return MehlerValue(mehler_prefactor(data, t), chat, expo)


def _fixed_set_top(value) -> complex:
    return value.top() if isinstance(value, NilPoly) else complex(value)


def lhs_density(data: FixedPointData) -> complex:
    """Supertrace of ``lift(phi) (sqrt(-1))^{k/2} chat(E) K_1(x0, x0)`` in the blade algebra."""
    if data.odd:
        raise UsageError("lhs_density is the even case; use odd_density_pair")
    integrand = phi_lift(data) * mehler_value(data).element()
    return _berezin_over_fixed_set(data, integrand, supertrace_of=True)


def _berezin_over_fixed_set(data: FixedPointData, x: CliffordElement, supertrace_of: bool) -> complex:
    if data.a == 0:
        return complex(supertrace(x) if supertrace_of else trace(x))
    # tangent c's are replaced by the form generators: keep the blade with
    # c over the normal directions and every chat, then take the top form
    n, a = data.n, data.a
    normal_c = tuple(range(a + 1, n + 1))
    coeff = x.coefficient(normal_c, range(1, n + 1))
    if not isinstance(coeff, NilPoly):
        coeff = NilPoly.const(data.ngen, coeff)
    scale = supertrace_sign(n) * 2**n
    if not supertrace_of:
        # Tr(x) = Str(eps x) for the grading eps; the grading blade has every
        # index in both c and chat, which the caller already multiplied in
        raise UsageError("trace over a positive-dimensional fixed set is taken through the grading")
    return complex(coeff.top() * scale)


def rhs_density(data: FixedPointData, method: str | None = None) -> complex:
    """Characteristic-form side at ``x0``.

    ``method`` picks the kernel route; the default is Chern roots for
    numeric data and power series in the nilpotent ring.
    """
    if data.odd:
        raise UsageError("rhs_density is the even case; use odd_density_pair")
    core = _form_product(data, method)
    value = (1 / 1j) ** (data.k // 2) * 2 ** (data.n / 2) * core
    return complex(_fixed_set_top(value))


def _form_product(data: FixedPointData, method: str | None, odd: bool = False):
    method = method or ("chern" if data.ring == "float" else "series")
    s = forms.NORMALIZATION["curvature_scale"]
    r = forms.NORMALIZATION["rotation_scale"]
    # kernels take the doubled argument: det_sqrt_cosh(M) = det^{1/2}cosh(M/2)
    XE = _scaled(data.RE, 2 * s) - 2 * r * data.L1
    Xperp = _scaled(data.REperp, 2 * s) - 2 * r * data.L2
    a_hat = forms.a_hat(data.Rprime, method) if data.a else 1.0
    nu = forms.nu_phi(data.group, data.Rdoubleprime, method)
    cosh = forms.det_sqrt_cosh(XE, method) if data.k else 1.0
    sinhc = forms.det_sqrt_sinhc(Xperp, method)
    half = _scaled(Xperp, 0.5)
    if odd:
        pf = forms.pfaffian_odd(half, 1e-12, "chern" if method == "chern" else "berezin")
    else:
        pf = forms.pfaffian(half, "chern" if method == "chern" else "berezin")
    return data.scalar(1) * a_hat * nu * cosh * sinhc * pf


def odd_density_pair(data: FixedPointData) -> tuple[complex, complex]:
    """Trace side and form side for an orientation-reversing involution-type ``phi``.

    Left: ``Tr[eps lift(d gamma) chat(E) K_1]``, the trace of the
    self-adjoint lift times the model kernel.  Right:
    ``-(1/sqrt(-1))^{k/2-1} 2^{n/2}`` times the form product with the odd
    Pfaffian.
    """
    if not data.odd:
        raise UsageError("odd_density_pair needs odd n")
    mv = mehler_value(data)
    # the trace carries a bare chat(E), without the (sqrt(-1))^{k/2} factor
    kernel = (build_chat_E(data.n, data.k, data.ring, data.ngen) * mv.exp_factor).scale(mv.prefactor)
    if data.a == 0:
        gamma = grading_element(data.n, data.ring, data.ngen) * phi_lift(data)
        lhs = complex(trace(gamma * kernel))
    else:
        # Tr(eps y) = Str(y), evaluated on the fixed set through the Berezin top
        lhs = _berezin_over_fixed_set(data, phi_lift(data) * kernel, True)
    core = _form_product(data, None, odd=True)
    rhs = -((1 / 1j) ** (data.k // 2 - 1)) * 2 ** (data.n / 2) * core
    return lhs, complex(_fixed_set_top(rhs))


def relative_error(lhs: complex, rhs: complex) -> float:
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale else 0.0
