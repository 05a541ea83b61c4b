"""Brute-force oracle: the representation of the Clifford algebra on Lambda(V).

Basis forms ``e^S`` are indexed by the bitmask of ``S``.  Generators act
by ``c(e_j) = eps(e_j) - iota(e_j)`` and ``chat(e_j) = eps(e_j) +
iota(e_j)``.  Blades are represented by multiplying dense generator
matrices in word order; nothing here reuses the blade sign tables.
This module is deliberately the slow, trusted path.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .clifford import CliffordElement, TauElement, UsageError
from .scalars import coerce, zero

MAX_REP_DIM = 10


class ResourceError(RuntimeError):
    """The dense representation would exceed the configured size cap."""


def _check_dim(n: int, cap: int = MAX_REP_DIM) -> None:
    if n > cap:
        raise ResourceError(f"dense representation of dimension 2**{n} exceeds cap 2**{cap}")


def exterior_basis(n: int) -> list[tuple[int, ...]]:
    """Subsets of ``{1..n}`` in bitmask order (position = mask)."""
    return [tuple(i + 1 for i in range(n) if s >> i & 1) for s in range(1 << n)]


@lru_cache(maxsize=None)
def _wedge_matrix(n: int, j: int) -> np.ndarray:
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=np.int64)
    bit = 1 << (j - 1)
    for s in range(dim):
        if s & bit:
            continue
        # e^j ^ e^S: move e^j past the elements of S below j
        sign = -1 if bin(s & (bit - 1)).count("1") % 2 else 1
        out[s | bit, s] = sign
    return out


@lru_cache(maxsize=None)
def _contract_matrix(n: int, j: int) -> np.ndarray:
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=np.int64)
    bit = 1 << (j - 1)
    for s in range(dim):
        if not s & bit:
            continue
        sign = -1 if bin(s & (bit - 1)).count("1") % 2 else 1
        out[s ^ bit, s] = sign
    return out


def c_matrix(n: int, j: int) -> np.ndarray:
    return _wedge_matrix(n, j) - _contract_matrix(n, j)


def chat_matrix(n: int, j: int) -> np.ndarray:
    return _wedge_matrix(n, j) + _contract_matrix(n, j)


def grading_matrix(n: int) -> np.ndarray:
    return np.diag([(-1) ** bin(s).count("1") for s in range(1 << n)]).astype(np.int64)


@lru_cache(maxsize=4096)
def _blade_matrix(n: int, c_mask: int, hat_mask: int) -> np.ndarray:
    m = np.eye(1 << n, dtype=np.int64)
    for i in range(1, n + 1):
        if c_mask >> (i - 1) & 1:
            m = m @ c_matrix(n, i)
    for i in range(1, n + 1):
        if hat_mask >> (i - 1) & 1:
            m = m @ chat_matrix(n, i)
    return m


def rep(x: CliffordElement, cap: int = MAX_REP_DIM) -> np.ndarray:
    """Dense operator matrix of ``x`` on Lambda(V).

    Exact elements give an object array of GaussianRational entries,
    float elements a complex array, nilpotent elements an object array of
    NilPoly entries.
    """
    n = x.dim
    _check_dim(n, cap)
    dim = 1 << n
    if x.ring == "float":
        out = np.zeros((dim, dim), dtype=complex)
        for bp, c in x.terms.items():
            out += c * _blade_matrix(n, bp.c_mask, bp.hat_mask)
        return out
    z = zero(x.ring, x.ngen)
    out = np.full((dim, dim), z, dtype=object)
    for bp, c in x.terms.items():
        m = _blade_matrix(n, bp.c_mask, bp.hat_mask)
        rows, cols = np.nonzero(m)
        for r, col in zip(rows, cols):
            out[r, col] = out[r, col] + c * int(m[r, col])
    return out


def identity(n: int, ring: str = "exact", ngen: int = 0) -> np.ndarray:
    if ring == "float":
        return np.eye(1 << n, dtype=complex)
    out = np.full((1 << n, 1 << n), zero(ring, ngen), dtype=object)
    for i in range(1 << n):
        out[i, i] = coerce(1, ring, ngen)
    return out


def _trace(m: np.ndarray):
    total = m[0, 0]
    for i in range(1, m.shape[0]):
        total = total + m[i, i]
    return total


@lru_cache(maxsize=8192)
def _blade_supertrace(n: int, c_mask: int, hat_mask: int) -> int:
    return int(np.trace(grading_matrix(n) @ _blade_matrix(n, c_mask, hat_mask)))


def oracle_supertrace(x: CliffordElement, cap: int = MAX_REP_DIM):
    """``tr(grading @ rep(x))`` on Lambda(V), summed blade by blade."""
    _check_dim(x.dim, cap)
    total = zero(x.ring, x.ngen)
    for bp, c in x.terms.items():
        s = _blade_supertrace(x.dim, bp.c_mask, bp.hat_mask)
        if s:
            total = total + c * s
    return total


def oracle_trace(x: CliffordElement, cap: int = MAX_REP_DIM):
    m = rep(x, cap)
    return _trace(m) if m.dtype == object else complex(np.trace(m))


def rep_tau(tau: TauElement) -> np.ndarray:
    """Integer matrix of ``tau = eps * chat(E)``."""
    chat = np.eye(1 << tau.n, dtype=np.int64)
    for i in range(1, tau.k + 1):
        chat = chat @ chat_matrix(tau.n, i)
    return grading_matrix(tau.n) @ chat if tau.grading else chat


def rotation_matrix(angles: Sequence[float], n: int, a: int = 0) -> np.ndarray:
    """``diag(1_a, A_1, ..., A_m)`` with ``A_j = [[cos, sin], [-sin, cos]]``."""
    b = n - a
    if b % 2 or len(angles) != b // 2:
        raise UsageError(f"need {b // 2} angles for n={n}, a={a}")
    out = np.eye(n)
    for j, t in enumerate(angles):
        p = a + 2 * j
        out[p : p + 2, p : p + 2] = [[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]]
    return out


def exterior_power(g: np.ndarray) -> np.ndarray:
    """Matrix of the induced map on Lambda(V): ``e^S -> g e^{s1} ^ ... ^ g e^{sp}``.

    Entries are minors of ``g``; this uses no Clifford structure.
    """
    n = g.shape[0]
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    basis = exterior_basis(n)
    by_size: dict[int, list[int]] = {}
    for s in range(dim):
        by_size.setdefault(len(basis[s]), []).append(s)
    for s in range(dim):
        cols = [i - 1 for i in basis[s]]
        for t in by_size[len(cols)]:
            rows = [i - 1 for i in basis[t]]
            out[t, s] = np.linalg.det(g[np.ix_(rows, cols)]) if cols else 1.0
    return out


def pullback_lift(angles: Sequence[float], n: int, a: int = 0) -> np.ndarray:
    """``Lambda((d phi)^{-1, *})`` for the block rotation ``phi``.

    The block matrix is read in the row convention, ``d phi(e_i) =
    sum_j g[i, j] e_j``, so the column matrix of ``d phi`` is ``g.T`` and the
    inverse transpose on covectors is ``inv(g.T).T = inv(g)``.  Its exterior
    power is taken minor by minor.
    """
    g = rotation_matrix(angles, n, a)
    return exterior_power(np.linalg.inv(g))
