"""Actor-critic learning in barrier coordinates with Bellman-error extrapolation.

The Bellman error is evaluated at a fixed set of off-trajectory points using
the model.  Because those points never move, every quantity that depends only
on the point (transformed dynamics, feature Jacobians, state penalty) is
computed once in :class:`GridCache`; the per-step work is then a reduction
that depends on the weights alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .barrier import vec_rate_factor
from .basis import QuadraticBasis
from .plants import Gains, PlantModel, transformed_dynamics


@dataclass(frozen=True)
class LearnerState:
    Wc: np.ndarray
    Gamma: np.ndarray
    Wa: np.ndarray


@dataclass(frozen=True)
class ExtrapolationGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("grid points must be an (N, 2n) array")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


def _control_matrix(shat, xhat, plant: PlantModel) -> np.ndarray:
    n = plant.n
    return vec_rate_factor(shat[n:], plant.limits[n:])[:, None] * plant.g(xhat)


def policy(shat, Wa, plant: PlantModel, basis: QuadraticBasis, R) -> np.ndarray:
    """``u = -1/2 R^-1 G(shat)^T grad_{s2} sigma(shat)^T Wa``."""
    shat = np.asarray(shat, dtype=float)
    _, _, G = transformed_dynamics(shat, plant)
    grad2 = basis.jacobian(shat)[:, plant.n:]
    return -0.5 * np.linalg.solve(np.atleast_2d(R), G.T @ (grad2.T @ np.asarray(Wa, dtype=float)))


def policy_from_parts(shat, G, Wa, basis: QuadraticBasis, Rinv, n: int) -> np.ndarray:
    grad2 = basis.jacobian(shat)[:, n:]
    return -0.5 * (Rinv @ (G.T @ (grad2.T @ Wa)))


def value(shat, Wc, basis: QuadraticBasis) -> float:
    return float(np.asarray(Wc, dtype=float) @ basis.sigma(shat))


def bellman_error(z, Wc, Wa, plant: PlantModel, basis: QuadraticBasis, Q, R):
    """Bellman error at one point and its regressor ``omega``.

    ``delta = omega . Wc + z^T Q z + u^T R u`` with ``u = policy(z, Wa)`` and
    ``omega = grad_{s1} sigma H + grad_{s2} sigma (F + G u)``.
    """
    z = np.asarray(z, dtype=float)
    R = np.atleast_2d(R)
    n = plant.n
    H, F, G = transformed_dynamics(z, plant)
    D = basis.jacobian(z)
    u = -0.5 * np.linalg.solve(R, G.T @ (D[:, n:].T @ np.asarray(Wa, dtype=float)))
    omega = D[:, :n] @ H + D[:, n:] @ (F + G @ u)
    delta = float(omega @ Wc + z @ Q @ z + u @ R @ u)
    return delta, omega


@dataclass(frozen=True)
class GridCache:
    """Weight-independent per-point quantities of the extrapolation grid.

    ``omega0[k] = grad_{s1} sigma_k H_k + grad_{s2} sigma_k F_k`` and
    ``C[k] = grad_{s2} sigma_k G_k`` so that ``omega_k = omega0[k] + C[k] u_k``.
    """

    points: np.ndarray
    omega0: np.ndarray
    C: np.ndarray
    q: np.ndarray
    R: np.ndarray
    Rinv: np.ndarray

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @classmethod
    def build(cls, grid, plant: PlantModel, basis: QuadraticBasis, Q, R) -> "GridCache":
        pts = grid.points if isinstance(grid, ExtrapolationGrid) else np.asarray(grid, dtype=float)
        n = plant.n
        N, L = pts.shape[0], basis.size
        omega0 = np.empty((N, L))
        C = np.empty((N, L, plant.m))
        D = basis.jacobian_batch(pts)
        for k in range(N):
            H, F, G = transformed_dynamics(pts[k], plant)
            omega0[k] = D[k, :, :n] @ H + D[k, :, n:] @ F
            C[k] = D[k, :, n:] @ G
        q = np.einsum("ni,ij,nj->n", pts, np.asarray(Q, dtype=float), pts)
        R = np.ascontiguousarray(np.atleast_2d(np.asarray(R, dtype=float)))
        return cls(
            np.ascontiguousarray(pts), np.ascontiguousarray(omega0), np.ascontiguousarray(C),
            np.ascontiguousarray(q), R, np.ascontiguousarray(np.linalg.inv(R)),
        )

    def regressors(self, Wa):
        """``(omega, u)`` at every grid point."""
        return kernels.grid_regressors(self.omega0, self.C, self.Rinv, np.ascontiguousarray(Wa, dtype=float))


def learner_derivatives(state: LearnerState, cache: GridCache, gains: Gains):
    """Right-hand sides of the critic, least-squares gain and actor update laws."""
    return kernels.learner_rates(
        cache.omega0, cache.C, cache.q, cache.R, cache.Rinv,
        np.ascontiguousarray(state.Wc, dtype=float),
        np.ascontiguousarray(state.Gamma, dtype=float),
        np.ascontiguousarray(state.Wa, dtype=float),
        gains.kc, gains.ka1, gains.ka2, gains.beta, gains.gamma,
    )


def excitation_matrix(omega, gamma: float) -> np.ndarray:
    """``(1/N) sum_k omega_k omega_k^T / rho_k^2``."""
    omega = np.asarray(omega, dtype=float)
    rho = 1.0 + gamma * np.einsum("nl,nl->n", omega, omega)
    scaled = omega / rho[:, None]
    return scaled.T @ scaled / omega.shape[0]


def pe_metric(cache: GridCache, Wa, gamma: float) -> float:
    """Smallest eigenvalue of the normalized regressor outer-product average."""
    omega, _ = cache.regressors(Wa)
    return max(float(np.linalg.eigvalsh(excitation_matrix(omega, gamma))[0]), 0.0)


def gamma_eig_bounds(Gamma) -> tuple[float, float]:
    ev = np.linalg.eigvalsh(0.5 * (Gamma + Gamma.T))
    return float(ev[0]), float(ev[-1])
