"""Logarithmic barrier transform for box constraints.

The scalar map ``b(y) = log(A (a - y) / (a (A - y)))`` sends the open interval
``(a, A)`` (with ``a < 0 < A``) onto the real line with ``b(0) = 0``.  Vector
versions apply it componentwise with per-component limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

# Inputs this close to a limit are treated as outside the box.
BOUNDARY_TOL = 1e-12


class BarrierDomainError(ValueError):
    """A value sits on or outside its barrier limits."""

    def __init__(self, index: int, value: float, lower: float, upper: float):
        self.index = index
        self.value = value
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"component {index}: value {value!r} outside barrier limits ({lower}, {upper})"
        )


@dataclass(frozen=True)
class BarrierLimits:
    """Per-component box ``lower < y < upper`` with ``lower < 0 < upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).ravel()
        hi = np.array(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError(f"limit vectors differ in length: {lo.size} vs {hi.size}")
        for j, (a, A) in enumerate(zip(lo, hi)):
            if not (a < 0.0 < A):
                raise ValueError(f"component {j}: need lower < 0 < upper, got ({a}, {A})")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __len__(self) -> int:
        return self.lower.size

    def __getitem__(self, idx) -> "BarrierLimits":
        return BarrierLimits(self.lower[idx], self.upper[idx])

    def pair(self, j: int) -> tuple[float, float]:
        return float(self.lower[j]), float(self.upper[j])

    def contains(self, y, margin: float = BOUNDARY_TOL) -> bool:
        y = np.asarray(y, dtype=float)
        return bool(np.all(y > self.lower + margin) & np.all(y < self.upper - margin))

    def violations(self, y, margin: float = 0.0) -> int:
        """Number of components of ``y`` on or outside the box."""
        y = np.asarray(y, dtype=float)
        return int(np.count_nonzero((y <= self.lower + margin) | (y >= self.upper - margin)))


def _check_scalar(y: float, a: float, A: float, index: int = 0) -> None:
    if not (a + BOUNDARY_TOL < y < A - BOUNDARY_TOL):
        raise BarrierDomainError(index, y, a, A)


def barrier(y: float, lim: tuple[float, float]) -> float:
    a, A = lim
    _check_scalar(y, a, A)
    return math.log(A * (a - y) / (a * (A - y)))


def barrier_inverse(s: float, lim: tuple[float, float]) -> float:
    a, A = lim
    # Evaluate on the side where exp cannot overflow.
    if s >= 0.0:
        e = math.exp(-s)
        return a * A * (1.0 - e) / (a - A * e)
    e = math.exp(s)
    return a * A * (e - 1.0) / (a * e - A)


def rate_factor(s: float, lim: tuple[float, float]) -> float:
    """Reciprocal of d b^-1/ds; the factor that scales velocities into s-space."""
    a, A = lim
    return (a * a * math.exp(s) - 2.0 * a * A + A * A * math.exp(-s)) / (A * a * a - a * A * A)


def rate_factor_derivative(s: float, lim: tuple[float, float]) -> float:
    a, A = lim
    return (a * a * math.exp(s) - A * A * math.exp(-s)) / (A * a * a - a * A * A)


def vec_barrier(y, lims: BarrierLimits) -> np.ndarray:
    y = np.ascontiguousarray(y, dtype=float)
    out, bad = kernels.barrier_vec(y, lims.lower, lims.upper, BOUNDARY_TOL)
    if bad >= 0:
        raise BarrierDomainError(bad, float(y[bad]), *lims.pair(bad))
    return out


def vec_barrier_inverse(s, lims: BarrierLimits) -> np.ndarray:
    return kernels.barrier_inverse_vec(np.ascontiguousarray(s, dtype=float), lims.lower, lims.upper)


def vec_rate_factor(s, lims: BarrierLimits) -> np.ndarray:
    return kernels.rate_factor_vec(np.ascontiguousarray(s, dtype=float), lims.lower, lims.upper)


def vec_rate_factor_derivative(s, lims: BarrierLimits) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    a, A = lims.lower, lims.upper
    return (a * a * np.exp(s) - A * A * np.exp(-s)) / (A * a * a - a * A * A)
