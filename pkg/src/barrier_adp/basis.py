"""Quadratic monomial feature maps for value-function approximation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadraticBasis:
    """Features ``sigma_l(s) = s[i_l] * s[j_l]`` with analytic Jacobian.

    Every such feature satisfies ``sigma(0) = 0`` and ``grad sigma(0) = 0``.
    """

    dim: int
    pairs: tuple[tuple[int, int], ...]
    name: str = "quadratic"

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        for i, j in pairs:
            if not (0 <= i < self.dim and 0 <= j < self.dim):
                raise ValueError(f"monomial ({i}, {j}) out of range for dimension {self.dim}")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_i", np.array([p[0] for p in pairs], dtype=np.intp))
        object.__setattr__(self, "_j", np.array([p[1] for p in pairs], dtype=np.intp))

    @property
    def size(self) -> int:
        return len(self.pairs)

    def sigma(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return s[self._i] * s[self._j]

    def jacobian(self, s) -> np.ndarray:
        """``L x dim`` matrix of partial derivatives."""
        s = np.asarray(s, dtype=float)
        D = np.zeros((self.size, self.dim))
        rows = np.arange(self.size)
        # each row is touched once per assignment, so diagonal terms get 2 s_i
        D[rows, self._i] = s[self._j]
        D[rows, self._j] += s[self._i]
        return D

    def jacobian_batch(self, S) -> np.ndarray:
        """Jacobians at every row of ``S``; shape ``(N, L, dim)``."""
        S = np.asarray(S, dtype=float)
        D = np.zeros((S.shape[0], self.size, self.dim))
        for l, (i, j) in enumerate(self.pairs):
            D[:, l, i] += S[:, j]
            D[:, l, j] += S[:, i]
        return D


def two_state_basis() -> QuadraticBasis:
    return QuadraticBasis(2, ((0, 0), (0, 1), (1, 1)), name="two_state")


def manipulator_basis() -> QuadraticBasis:
    # state order: [s1_1, s1_2, s2_1, s2_2]
    s11, s12, s21, s22 = 0, 1, 2, 3
    pairs = (
        (s11, s21), (s12, s22), (s21, s12), (s22, s11), (s11, s12),
        (s22, s21), (s11, s11), (s12, s12), (s21, s21), (s22, s22),
    )
    return QuadraticBasis(4, pairs, name="manipulator")


BASES = {"two_state": two_state_basis, "manipulator": manipulator_basis}
