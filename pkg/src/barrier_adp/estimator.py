"""Output-feedback state estimator for Brunovsky-form plants.

The estimator integrates in original coordinates.  Its correction term is
designed from the position error in barrier coordinates, and the auxiliary
filter is realized without differentiating the measurement: only ``eta_bar``
is integrated, and ``eta`` is recovered algebraically from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barrier import BarrierLimits, vec_barrier, vec_rate_factor
from .plants import Gains, PlantModel


@dataclass(frozen=True)
class EstimatorState:
    xhat: np.ndarray        # [xhat1; xhat2]
    etabar: np.ndarray      # auxiliary filter state, starts at 0
    snapshot: np.ndarray    # b(x1(0)) - b(xhat1(0)), fixed for the run

    @classmethod
    def initial(cls, y0, xhat0, lims: BarrierLimits) -> "EstimatorState":
        xhat0 = np.array(xhat0, dtype=float)
        n = xhat0.size // 2
        snap = vec_barrier(y0, lims[:n]) - vec_barrier(xhat0[:n], lims[:n])
        return cls(xhat0, np.zeros(n), snap)

    @property
    def n(self) -> int:
        return self.etabar.size


def position_error(y, xhat1, lims1: BarrierLimits) -> np.ndarray:
    """``b(x1) - b(xhat1)``: the output error in barrier coordinates."""
    return vec_barrier(y, lims1) - vec_barrier(xhat1, lims1)


def eta_from(etabar, s_err, snapshot, gains: Gains) -> np.ndarray:
    return etabar - (gains.k + gains.alpha) * (s_err - snapshot)


def eta(est: EstimatorState, y, gains: Gains, lims: BarrierLimits) -> np.ndarray:
    n = est.n
    return eta_from(est.etabar, position_error(y, est.xhat[:n], lims[:n]), est.snapshot, gains)


def nu1_from(s_err, eta_val, shat1, gains: Gains, lims1: BarrierLimits) -> np.ndarray:
    a = gains.alpha
    num = a * a * s_err - (gains.k + a + gains.beta1) * eta_val
    return num / vec_rate_factor(shat1, lims1)


def nu1(est: EstimatorState, y, gains: Gains, lims: BarrierLimits) -> np.ndarray:
    n = est.n
    lims1 = lims[:n]
    shat1 = vec_barrier(est.xhat[:n], lims1)
    s_err = vec_barrier(y, lims1) - shat1
    return nu1_from(s_err, eta_from(est.etabar, s_err, est.snapshot, gains), shat1, gains, lims1)


def estimator_rates(xhat, etabar, snapshot, y, u, plant: PlantModel, gains: Gains, lims1=None):
    """Array-level estimator right-hand side.

    Returns ``(dxhat, detabar, eta)``.  Only the measured output ``y = x1`` of
    the plant enters here.
    """
    n = plant.n
    if lims1 is None:
        lims1 = plant.limits[:n]
    shat1 = vec_barrier(xhat[:n], lims1)
    s_err = vec_barrier(y, lims1) - shat1
    eta_val = eta_from(etabar, s_err, snapshot, gains)
    nu = nu1_from(s_err, eta_val, shat1, gains, lims1)
    dxhat = np.empty(2 * n)
    dxhat[:n] = xhat[n:]
    dxhat[n:] = plant.f(xhat) + plant.g(xhat) @ u + nu
    detabar = -(gains.k + gains.beta1) * eta_val - gains.k * gains.alpha * s_err
    return dxhat, detabar, eta_val


def estimator_derivatives(est: EstimatorState, y, u, plant: PlantModel, gains: Gains):
    """Return ``(dxhat1, dxhat2, detabar)`` without mutating ``est``."""
    dxhat, detabar, _ = estimator_rates(
        est.xhat, est.etabar, est.snapshot, np.asarray(y, dtype=float),
        np.asarray(u, dtype=float), plant, gains,
    )
    n = plant.n
    return dxhat[:n], dxhat[n:], detabar


def transformed_estimate(est: EstimatorState, lims: BarrierLimits) -> np.ndarray:
    return vec_barrier(est.xhat, lims)
