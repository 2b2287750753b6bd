"""Safe output-feedback model-based reinforcement learning for Brunovsky-form
systems using a state-wise barrier transformation."""

from .barrier import (
    BarrierDomainError,
    BarrierLimits,
    barrier,
    barrier_inverse,
    rate_factor,
    rate_factor_derivative,
)
from .basis import QuadraticBasis
from .estimator import EstimatorState, estimator_derivatives, transformed_estimate
from .kernels import BACKEND
from .learner import GridCache, bellman_error, pe_metric, policy, value
from .plants import Gains, PlantModel, Scenario, load_scenario, transformed_dynamics
from .sim import SimConfig, SimLog, evaluation_rollout, run_closed_loop

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BarrierDomainError",
    "BarrierLimits",
    "EstimatorState",
    "Gains",
    "GridCache",
    "PlantModel",
    "QuadraticBasis",
    "Scenario",
    "SimConfig",
    "SimLog",
    "barrier",
    "barrier_inverse",
    "bellman_error",
    "estimator_derivatives",
    "evaluation_rollout",
    "load_scenario",
    "pe_metric",
    "policy",
    "rate_factor",
    "rate_factor_derivative",
    "run_closed_loop",
    "transformed_dynamics",
    "transformed_estimate",
    "value",
]
