"""Characteristic-form kernels on real antisymmetric matrices.

Every kernel has two independent evaluation routes:

* ``method="chern"``: block-diagonalize (Chern roots) and take the
  closed-form product over 2x2 blocks;
* ``method="series"``: ``exp(1/2 tr log f(M))`` with truncated matrix
  power series.  This route works over every scalar ring, including
  nilpotent 2-form coefficients where it terminates.

Block convention: a block with angle ``t`` is ``[[0, -t], [t, 0]]``.  The
Pfaffian follows the Berezin definition
``Pf(M) = T(exp(sum_{s<t} <M h_s, h_t> h^s ^ h^t))`` with
``<M h_s, h_t> = M[t, s]``, so ``Pf([[0, -t], [t, 0]]) = t``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import scipy.linalg

from .clifford import BigradedForm, ConvergenceError, UsageError, berezin_T, wedge_exp
from .scalars import GaussianRational, NilPoly, coerce, magnitude

# Every pi factor used by the index density lives here.
NORMALIZATION = {
    # A-hat genus: det^{1/2}((R/4pi) / sinh(R/4pi))
    "a_hat_scale": 1 / (4 * math.pi),
    # nu_phi: det^{-1/2}(1 - phi^N exp(-R/(2pi)))
    "nu_exponent_scale": 1 / (2 * math.pi),
    # density arguments: R/(4pi) - L/2
    "curvature_scale": 1 / (4 * math.pi),
    "rotation_scale": 0.5,
    # model kernel volume factor: (4 pi t)^{-a/2}
    "heat_volume": 4 * math.pi,
}

SERIES_TOL = 1e-17
SERIES_CAP = 6000


class SingularityError(ArithmeticError):
    """A determinant vanished or a kernel hit a pole."""


# -- matrix containers -------------------------------------------------------


class AntisymmetricMatrix:
    """Antisymmetric matrix stored by its strict upper triangle."""

    __slots__ = ("size", "upper")

    def __init__(self, size: int, upper: dict[tuple[int, int], Any] | None = None):
        self.size = size
        self.upper = {}
        for (i, j), v in (upper or {}).items():
            if not 0 <= i < j < size:
                raise UsageError(f"entry ({i}, {j}) is not in the strict upper triangle")
            if v != 0:
                self.upper[(i, j)] = v

    @classmethod
    def from_array(cls, m, tol: float = 0.0) -> "AntisymmetricMatrix":
        m = np.asarray(m, dtype=object if _is_object(m) else None)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise UsageError("expected a square matrix")
        size = m.shape[0]
        upper = {}
        for i in range(size):
            if magnitude(m[i, i]) > tol:
                raise UsageError(f"diagonal entry ({i}, {i}) is nonzero")
            for j in range(i + 1, size):
                if magnitude(m[i, j] + m[j, i]) > tol:
                    raise UsageError(f"entries ({i}, {j}) and ({j}, {i}) are not antisymmetric")
                upper[(i, j)] = m[i, j]
        return cls(size, upper)

    def to_array(self, ring: str | None = None, ngen: int = 0) -> np.ndarray:
        vals = list(self.upper.values())
        if ring is None:
            ring = _infer_ring(vals)
        if ring == "float":
            out = np.zeros((self.size, self.size))
            if any(isinstance(v, complex) and v.imag for v in vals):
                out = out.astype(complex)
        else:
            if ring == "nilpotent" and vals:
                ngen = next(v.ngen for v in vals if isinstance(v, NilPoly))
            z = coerce(0, ring, ngen)
            out = np.full((self.size, self.size), z, dtype=object)
        for (i, j), v in self.upper.items():
            v = coerce(v, ring, ngen) if ring != "float" else v
            out[i, j] = v
            out[j, i] = -v
        return out

    def __repr__(self):
        return f"AntisymmetricMatrix({self.size}, {self.upper})"


def _is_object(m) -> bool:
    try:
        flat = list(np.asarray(m, dtype=object).ravel())
    except Exception:
        return False
    return any(isinstance(v, (NilPoly, GaussianRational)) for v in flat)


def _infer_ring(vals) -> str:
    if any(isinstance(v, NilPoly) for v in vals):
        return "nilpotent"
    if vals and all(isinstance(v, (int, GaussianRational)) or hasattr(v, "denominator") for v in vals):
        return "exact"
    return "float"


def as_array(M) -> np.ndarray:
    """Normalize any supported matrix input into a numpy array."""
    if isinstance(M, AntisymmetricMatrix):
        return M.to_array()
    if isinstance(M, BlockRotation):
        return M.matrix()
    if isinstance(M, np.ndarray):
        return M
    if _is_object(M):
        return np.array(M, dtype=object)
    return np.array(M, dtype=float)


@dataclass(frozen=True)
class BlockRotation:
    """2x2 block form ``[[0, -t], [t, 0]]`` with an optional trailing zero row."""

    angles: tuple[float, ...]
    has_zero_row: bool = False

    @property
    def size(self) -> int:
        return 2 * len(self.angles) + int(self.has_zero_row)

    def matrix(self) -> np.ndarray:
        return block_matrix(self.angles, self.has_zero_row)


def block_matrix(angles: Sequence[Any], zero_row: bool = False) -> np.ndarray:
    size = 2 * len(angles) + int(zero_row)
    if any(isinstance(t, NilPoly) for t in angles):
        ngen = next(t.ngen for t in angles if isinstance(t, NilPoly))
        out = np.full((size, size), NilPoly(ngen), dtype=object)
    elif any(isinstance(t, complex) for t in angles):
        out = np.zeros((size, size), dtype=complex)
    else:
        out = np.zeros((size, size))
    for j, t in enumerate(angles):
        out[2 * j, 2 * j + 1] = -t
        out[2 * j + 1, 2 * j] = t
    return out


@dataclass(frozen=True)
class GroupElement:
    """Normal rotation ``phi^N`` given by plane angles.

    Each plane carries ``[[cos t, sin t], [-sin t, cos t]]``; a trailing
    ``-1`` eigenvalue (orientation-reversing involution) is appended when
    ``reflection`` is set.
    """

    angles: tuple[float, ...]
    reflection: bool = False

    @property
    def size(self) -> int:
        return 2 * len(self.angles) + int(self.reflection)

    def matrix(self) -> np.ndarray:
        out = np.eye(self.size)
        for j, t in enumerate(self.angles):
            out[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = [
                [math.cos(t), math.sin(t)],
                [-math.sin(t), math.cos(t)],
            ]
        if self.reflection:
            out[-1, -1] = -1.0
        return out

    def log(self) -> np.ndarray:
        """Block logarithm ``[[0, t], [-t, 0]]``; the reflected line gets 0."""
        out = np.zeros((self.size, self.size))
        for j, t in enumerate(self.angles):
            out[2 * j, 2 * j + 1] = t
            out[2 * j + 1, 2 * j] = -t
        return out


# -- Chern roots -------------------------------------------------------------


@dataclass(frozen=True)
class ChernDecomposition:
    roots: BlockRotation
    basis: np.ndarray  # orthogonal Q with M = Q @ roots.matrix() @ Q.T

    @property
    def orientation(self) -> float:
        return float(np.sign(np.linalg.det(self.basis))) if self.basis.size else 1.0


def chern_roots(M, tol: float = 1e-10) -> ChernDecomposition:
    """Orthogonal block-diagonalization of a real antisymmetric matrix.

    Angles are returned nonnegative; a negative block is flipped by
    swapping the sign of one basis vector, which is recorded in the
    orientation of the returned basis.
    """
    m = np.asarray(as_array(M), dtype=float)
    size = m.shape[0]
    if size == 0:
        return ChernDecomposition(BlockRotation(()), np.zeros((0, 0)))
    if np.abs(m + m.T).max() > tol * max(1.0, np.abs(m).max()):
        raise UsageError("chern_roots needs an antisymmetric matrix")
    t, q = scipy.linalg.schur(m, output="real")
    blocks: list[tuple[float, list[int]]] = []
    zeros: list[int] = []
    i = 0
    while i < size:
        if i + 1 < size and abs(t[i + 1, i]) > tol * max(1.0, np.abs(m).max()) * 1e-3:
            blocks.append((t[i + 1, i], [i, i + 1]))
            i += 2
        else:
            zeros.append(i)
            i += 1
    q = q.copy()
    angles = []
    cols = []
    for theta, (p, r) in blocks:
        if theta < 0:
            q[:, r] = -q[:, r]
            theta = -theta
        angles.append(theta)
        cols += [p, r]
    # pair up zero eigenvalues into zero-angle blocks
    while len(zeros) >= 2:
        cols += [zeros.pop(0), zeros.pop(0)]
        angles.append(0.0)
    has_zero_row = bool(zeros)
    cols += zeros
    basis = q[:, cols]
    roots = BlockRotation(tuple(angles), has_zero_row)
    err = np.abs(basis @ roots.matrix() @ basis.T - m).max() if size else 0.0
    if err > 1e-10 * max(1.0, np.abs(m).max()):
        raise ConvergenceError(f"Chern-root reconstruction error {err:.3g}")
    return ChernDecomposition(roots, basis)


# -- generic matrix series ----------------------------------------------------


def _mnorm(m: np.ndarray) -> float:
    """Max row sum of entry magnitudes (a submultiplicative norm)."""
    if m.size == 0:
        return 0.0
    if m.dtype != object:
        return float(np.abs(m).sum(axis=1).max())
    return max(math.fsum(magnitude(v) for v in row) for row in m)


def _eye_like(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    if m.dtype != object:
        return np.eye(n, dtype=m.dtype)
    sample = next((v for v in m.ravel() if isinstance(v, NilPoly)), None)
    if sample is not None:
        out = np.full((n, n), NilPoly(sample.ngen), dtype=object)
        for i in range(n):
            out[i, i] = NilPoly.const(sample.ngen, 1)
        return out
    out = np.full((n, n), GaussianRational(0), dtype=object)
    for i in range(n):
        out[i, i] = GaussianRational(1)
    return out


def _scale(m: np.ndarray, s: float) -> np.ndarray:
    if m.dtype != object:
        return m * s
    out = np.empty_like(m)
    for idx, v in np.ndenumerate(m):
        out[idx] = v * s
    return out


def _trace(m: np.ndarray):
    total = m[0, 0] * 0 if m.size else 0.0
    for i in range(m.shape[0]):
        total = total + m[i, i]
    return total


def _as_numeric(m) -> np.ndarray:
    m = as_array(m)
    if m.dtype == object and not any(isinstance(v, NilPoly) for v in m.ravel()):
        m = m.astype(complex)
    if m.dtype != object and not np.iscomplexobj(m):
        m = m.astype(float)
    return m


def even_series(m: np.ndarray, coeff, tol: float = SERIES_TOL) -> np.ndarray:
    """``sum_p coeff(p) m**(2p)`` for an entire function of ``m**2``."""
    out = _eye_like(m)
    sq = m @ m
    power = _eye_like(m)
    for p in range(1, SERIES_CAP):
        power = power @ sq
        term = _scale(power, coeff(p))
        out = out + term
        if _mnorm(term) <= tol * max(1.0, _mnorm(out)) and _mnorm(power) * abs(coeff(p + 1)) <= tol:
            return out
    raise ConvergenceError("matrix power series did not converge")


def expm_series(m: np.ndarray, tol: float = SERIES_TOL) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor core."""
    s = 0
    nrm = _mnorm(m)
    while nrm > 0.5:
        nrm /= 2
        s += 1
    y = _scale(m, 0.5**s)
    out = _eye_like(m)
    term = _eye_like(m)
    for k in range(1, SERIES_CAP):
        term = _scale(term @ y, 1.0 / k)
        out = out + term
        if _mnorm(term) <= tol * max(1.0, _mnorm(out)):
            break
    else:
        raise ConvergenceError("matrix exponential series did not converge")
    for _ in range(s):
        out = out @ out
    return out


def trace_log1p(y: np.ndarray, tol: float = SERIES_TOL):
    """``tr log(1 + y) = sum_p (-1)**(p+1) tr(y**p) / p``."""
    if y.size == 0:
        return 0.0
    total = _trace(y) * 0
    power = _eye_like(y)
    prev = math.inf
    stall = 0
    for p in range(1, SERIES_CAP):
        power = power @ y
        term = _trace(power) * ((-1) ** (p + 1) / p)
        total = total + term
        size = _mnorm(power) / p
        if size <= tol * max(1.0, magnitude(total)):
            return total
        stall = stall + 1 if size >= prev else 0
        if stall > 50 or not math.isfinite(size):
            break
        prev = size
    raise ConvergenceError(
        "log series diverges (spectral radius >= 1); use method='chern' for this matrix"
    )


def _det_sqrt_from_tracelog(tl, power: float = 0.5):
    if isinstance(tl, NilPoly):
        return (tl * power).exp()
    return cmath.exp(power * tl)


def _real_if_close(v):
    if isinstance(v, complex) and abs(v.imag) <= 1e-14 * max(1.0, abs(v.real)):
        return v.real
    return v


# -- kernels ------------------------------------------------------------------


def _check_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UsageError("expected a square matrix")


def pfaffian(M, method: str = "berezin"):
    """Pfaffian with ``Pf([[0, -t], [t, 0]]) = t``.

    ``method="berezin"`` evaluates the Berezin coefficient of the exterior
    exponential; ``"recursive"`` expands along the first row; ``"chern"``
    uses the Chern-root basis (float matrices only).
    """
    m = as_array(M)
    _check_square(m)
    size = m.shape[0]
    if size % 2:
        raise UsageError("pfaffian needs an even-sized matrix; use pfaffian_odd for the odd block form")
    if method == "berezin":
        return _pfaffian_berezin(m)
    if method == "recursive":
        return _pfaffian_recursive(m.T)
    if method == "chern":
        dec = chern_roots(m)
        return dec.orientation * math.prod(dec.roots.angles)
    raise UsageError(f"unknown pfaffian method {method!r}")


def _pfaffian_berezin(m: np.ndarray):
    size = m.shape[0]
    if size == 0:
        return 1
    ring, ngen = _ring_of_array(m)
    # forms live in the hatted half of a dim-size bigraded algebra; the
    # unhatted half is filled by a fixed top factor so that T applies
    terms = {}
    for s in range(size):
        for t in range(s + 1, size):
            v = m[t, s]
            if v != 0:
                terms[(1 << s | 1 << t) << size] = v
    two_form = BigradedForm(size, terms, ring, ngen)
    top_c = BigradedForm(size, {(1 << size) - 1: 1}, ring, ngen)
    return berezin_T(top_c.wedge(wedge_exp(two_form)))


def _ring_of_array(m: np.ndarray) -> tuple[str, int]:
    if m.dtype == object:
        for v in m.ravel():
            if isinstance(v, NilPoly):
                return "nilpotent", v.ngen
        return "exact", 0
    return "float", 0


def _pfaffian_recursive(m: np.ndarray):
    """Standard Pfaffian (``Pf([[0, a], [-a, 0]]) = a``) by first-row expansion."""
    size = m.shape[0]
    if size == 0:
        return 1
    total = None
    rest = list(range(1, size))
    for j in rest:
        if m[0, j] == 0:
            continue
        keep = [r for r in rest if r != j]
        sub = m[np.ix_(keep, keep)]
        sign = 1 if j % 2 else -1
        term = m[0, j] * _pfaffian_recursive(sub) * sign
        total = term if total is None else total + term
    return total if total is not None else m[0, 0] * 0


def pfaffian_odd(M, tol: float = 0.0, method: str = "berezin"):
    """Pfaffian of the odd shape ``diag(M', 0)``: the Pfaffian of ``M'``.

    The last row and column must vanish; anything else is a usage error.
    For ``M'`` in block form this is the product of the block angles.
    """
    m = as_array(M)
    _check_square(m)
    size = m.shape[0]
    if size % 2 == 0:
        raise UsageError("pfaffian_odd needs an odd-sized matrix")
    for i in range(size):
        if magnitude(m[i, -1]) > tol or magnitude(m[-1, i]) > tol:
            raise UsageError(f"entry ({i}, {size - 1}) breaks the odd block form (last row and column must vanish)")
    return pfaffian(m[:-1, :-1], method)


def _angles(M) -> tuple[float, ...]:
    return chern_roots(M).roots.angles


def det_sqrt_cosh(M, method: str = "chern"):
    """``det^{1/2} cosh(M/2)``; a block with angle ``t`` contributes ``cos(t/2)``."""
    if method == "chern":
        return math.prod(math.cos(t / 2) for t in _angles(M))
    m = _scale(_as_numeric(M), 0.5)
    c = even_series(m, lambda p: 1 / math.factorial(2 * p))
    return _real_if_close(_det_sqrt_from_tracelog(trace_log1p(c - _eye_like(m))))


def _sinhc(x: float) -> float:
    return math.sin(x) / x if x else 1.0


def det_sqrt_sinhc(M, method: str = "chern"):
    """``det^{1/2}(sinh(M/2) / (M/2))``; a block contributes ``sin(t/2)/(t/2)``."""
    if method == "chern":
        return math.prod(_sinhc(t / 2) for t in _angles(M))
    m = _scale(_as_numeric(M), 0.5)
    s = even_series(m, lambda p: 1 / math.factorial(2 * p + 1))
    return _real_if_close(_det_sqrt_from_tracelog(trace_log1p(s - _eye_like(m))))


def a_hat(M, method: str = "chern"):
    """A-hat form ``det^{1/2}((M/4pi) / sinh(M/4pi))``."""
    k = NORMALIZATION["a_hat_scale"]
    if method == "chern":
        out = 1.0
        for t in _angles(M):
            x = t * k
            if x and abs(math.sin(x)) < 1e-12:
                raise SingularityError(f"A-hat pole at angle {t}")
            out *= 1 / _sinhc(x)
        return out
    m = _scale(_as_numeric(M), k)
    s = even_series(m, lambda p: 1 / math.factorial(2 * p + 1))
    return _real_if_close(_det_sqrt_from_tracelog(trace_log1p(s - _eye_like(m)), -0.5))


def nu_phi(g: GroupElement, M=None, method: str = "chern"):
    """``det^{-1/2}(1 - phi^N exp(-M / 2pi))``, principal branch from ``M = 0``.

    The Chern route needs ``M`` in the block form of ``g``'s planes (it
    commutes with ``phi^N``); the series route accepts any ``M``.
    """
    size = g.size
    if M is None:
        M = np.zeros((size, size))
    m = as_array(M)
    if m.shape != (size, size):
        raise UsageError(f"curvature block has shape {m.shape}, expected {(size, size)}")
    k = NORMALIZATION["nu_exponent_scale"]
    if method == "chern":
        mf = np.asarray(m, dtype=float)
        out = 1.0
        for j, t in enumerate(g.angles):
            p = 2 * j
            x = mf[p + 1, p]
            alpha = t + x * k
            s = math.sin(alpha / 2)
            if s == 0 or abs(s) < 1e-300:
                raise SingularityError(f"det(1 - phi e^(-M/2pi)) vanishes in plane {j}")
            out /= 2 * s
        mask = np.ones_like(mf, dtype=bool)
        for j in range(len(g.angles)):
            mask[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = False
        if g.reflection:
            mask[-1, -1] = False
            out /= math.sqrt(2.0)
        if np.abs(mf[mask]).max(initial=0.0) > 1e-12:
            raise UsageError("Chern route for nu_phi needs M aligned with the rotation planes")
        return out
    phi = g.matrix()
    one_minus = np.eye(size) - phi
    det0 = np.linalg.det(one_minus)
    if abs(det0) < 1e-14:
        raise SingularityError("det(1 - phi^N) vanishes: degenerate normal rotation")
    base = 1 / math.sqrt(det0) if det0 > 0 else 1 / cmath.sqrt(det0)
    mm = _as_numeric(m)
    if mm.size and _mnorm(mm) == 0:
        return base
    e = expm_series(_scale(mm, -k))
    # 1 - phi e = (1 - phi)(1 + Y),  Y = (1 - phi)^{-1} phi (1 - e)
    left = np.linalg.solve(one_minus, phi)
    y = _matmul_mixed(left, _eye_like(e) - e)
    tl = trace_log1p(y)
    return _real_if_close(_det_sqrt_from_tracelog(tl, -0.5) * base)


def _matmul_mixed(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if b.dtype == object:
        return a.astype(object) @ b
    return a @ b


def det_sqrt_1_minus(g: GroupElement) -> float:
    """``det^{1/2}(1 - phi^N)`` on the principal branch, by direct determinant."""
    d = np.linalg.det(np.eye(g.size) - g.matrix())
    if d <= 0:
        raise SingularityError("det(1 - phi^N) is not positive")
    return math.sqrt(d)
