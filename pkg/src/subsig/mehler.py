"""Harmonic-oscillator determinant factor and a finite-difference oracle for it.

The model operator is ``-sum_r (d_r + (B y)_r / 4)**2`` on ``R^m`` with a
real antisymmetric coupling ``B``.  Its heat kernel on the diagonal,
divided by the free kernel ``(4 pi t)^{-m/2}``, is
``det^{1/2}((tB/2) / sinh(tB/2))``; for a block ``[[0, -x], [x, 0]]``
that is ``(t x / 2) / sin(t x / 2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import forms
from .clifford import ConvergenceError, UsageError


def closed_form_trace_factor(B, t: float):
    """``det^{1/2}((tB/2) / sinh(tB/2))`` through the A-hat kernel."""
    if t <= 0:
        raise UsageError("t must be positive")
    b = np.asarray(B, dtype=float)
    # a_hat(M) = det^{1/2}((M/4pi)/sinh(M/4pi)), so M = 2 pi t B
    return float(forms.a_hat(2 * math.pi * t * b, method="chern"))


@dataclass(frozen=True)
class OscillatorSpec:
    """Grid problem for the FD oracle.

    ``extent`` is the half-width of the square domain; ``None`` picks the
    smallest extent allowed for the given ``t``.
    """

    B: tuple[tuple[float, ...], ...]
    spacing: float
    extent: float | None = None
    cfl: float = 0.25

    @property
    def m(self) -> int:
        return len(self.B)

    def min_extent(self, t: float) -> float:
        norm = float(np.linalg.norm(np.asarray(self.B, dtype=float), 2)) if self.m else 0.0
        return 6 * math.sqrt(t) * max(1.0, norm)


def oscillator_spec(theta: float, spacing: float, extent: float | None = None) -> OscillatorSpec:
    """Two-dimensional spec with a single block of angle ``theta``."""
    return OscillatorSpec(((0.0, -theta), (theta, 0.0)), spacing, extent)


def _evolve(u: np.ndarray, h: float, dt: float, steps: int, drift, potential: np.ndarray | None) -> np.ndarray:
    inv_h2 = 1.0 / (h * h)
    inv_2h = 1.0 / (2 * h)
    dx, dy = drift if drift is not None else (None, None)
    peak = float(np.abs(u).max())
    for step in range(steps):
        c = u[1:-1, 1:-1]
        lap = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4 * c) * inv_h2
        rhs = lap
        if dx is not None:
            gx = (u[2:, 1:-1] - u[:-2, 1:-1]) * inv_2h
            gy = (u[1:-1, 2:] - u[1:-1, :-2]) * inv_2h
            rhs = rhs + dx * gx + dy * gy + potential * c
        u[1:-1, 1:-1] = c + dt * rhs
        if step % 256 == 0:
            cur = float(np.abs(u).max())
            if not math.isfinite(cur) or cur > 1e6 * peak:
                raise ConvergenceError("finite-difference evolution is unstable")
    return u


def fd_heat_trace(spec: OscillatorSpec, t: float) -> float:
    """On-diagonal heat kernel at the origin over the free one, by explicit FD.

    Expanding the square gives ``u_t = Lap u + (B y / 2) . grad u +
    |B y|^2 / 16 u`` (the divergence term vanishes since ``tr B = 0``).
    Both runs start from the same Gaussian of width two cells and use
    Dirichlet walls, so most discretization error cancels in the ratio.
    """
    if spec.m != 2:
        raise UsageError("the FD oracle is two-dimensional")
    if t <= 0:
        raise UsageError("t must be positive")
    B = np.asarray(spec.B, dtype=float)
    if np.abs(B + B.T).max() > 1e-14:
        raise UsageError("B must be antisymmetric")
    h = spec.spacing
    need = spec.min_extent(t)
    extent = need if spec.extent is None else spec.extent
    if extent < need - 1e-12:
        raise UsageError(f"grid extent {extent} is below the required {need:.4g}")
    half = int(math.ceil(extent / h))
    y = np.arange(-half, half + 1) * h
    Y1, Y2 = np.meshgrid(y, y, indexing="ij")
    sigma = 2 * h
    u0 = np.exp(-(Y1**2 + Y2**2) / (2 * sigma**2)) / (2 * math.pi * sigma**2)
    dt_max = spec.cfl * h * h
    steps = int(math.ceil(t / dt_max))
    dt = t / steps
    # drift (B y)/2 and potential |B y|^2 / 16 on the interior
    by1 = B[0, 0] * Y1 + B[0, 1] * Y2
    by2 = B[1, 0] * Y1 + B[1, 1] * Y2
    inner = (slice(1, -1), slice(1, -1))
    drift = (0.5 * by1[inner], 0.5 * by2[inner])
    potential = ((by1**2 + by2**2) / 16)[inner]
    free = _evolve(u0.copy(), h, dt, steps, None, None)
    model = _evolve(u0.copy(), h, dt, steps, drift, potential)
    return float(model[half, half] / free[half, half])


@dataclass(frozen=True)
class ConvergenceRow:
    spacing: float
    fd_value: float
    closed_form: float
    error: float


def convergence_study(theta: float, t: float, spacings: Sequence[float]) -> list[ConvergenceRow]:
    B = ((0.0, -theta), (theta, 0.0))
    exact = closed_form_trace_factor(B, t)
    rows = []
    for h in spacings:
        v = fd_heat_trace(OscillatorSpec(B, h), t)
        rows.append(ConvergenceRow(h, v, exact, abs(v - exact)))
    return rows


def observed_orders(rows: Sequence[ConvergenceRow]) -> list[float]:
    """``log2`` of successive error ratios (about 2 for a second-order scheme)."""
    out = []
    for coarse, fine in zip(rows, rows[1:]):
        ratio = coarse.error / fine.error if fine.error else math.inf
        out.append(math.log(ratio) / math.log(coarse.spacing / fine.spacing))
    return out


def write_csv(rows: Sequence[ConvergenceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["spacing", "fd_value", "closed_form", "error"])
        for r in rows:
            w.writerow([repr(r.spacing), repr(r.fd_value), repr(r.closed_form), repr(r.error)])
