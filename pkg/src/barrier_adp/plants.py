"""Brunovsky-form plants, their barrier-transformed dynamics, and the two
benchmark scenarios (a two-state nonlinear system and a two-link planar
manipulator)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .barrier import BarrierLimits, vec_barrier_inverse, vec_rate_factor
from .basis import QuadraticBasis, manipulator_basis, two_state_basis

GAIN_NAMES = ("k", "alpha", "beta1", "kc", "ka1", "ka2", "beta", "gamma")
GAIN_ALIASES = {"v": "gamma"}


@dataclass(frozen=True)
class PlantModel:
    """``x1' = x2, x2' = f(x) + g(x) u`` with ``x = [x1; x2]`` in R^(2n)."""

    name: str
    n: int
    m: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    limits: BarrierLimits
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.limits) != 2 * self.n:
            raise ValueError(f"limits have {len(self.limits)} components, expected {2 * self.n}")

    def flow(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([x[self.n:], self.f(x) + self.g(x) @ u])


@dataclass(frozen=True)
class Gains:
    k: float
    alpha: float
    beta1: float
    kc: float
    ka1: float
    ka2: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in GAIN_NAMES:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"gain {name} must be positive, got {value!r}")

    def with_value(self, name: str, value: float) -> "Gains":
        name = GAIN_ALIASES.get(name, name)
        if name not in GAIN_NAMES:
            raise KeyError(name)
        return replace(self, **{name: float(value)})

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in GAIN_NAMES}


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice of ``per_axis**dim`` points in ``[-half_width, half_width]^dim``.

    ``layout="centered"`` puts one point at the centre of each cell of a
    ``per_axis``-fold partition of every axis; ``layout="endpoints"`` spaces
    points evenly with the first and last on the cube faces.
    """

    half_width: float
    per_axis: int
    layout: str = "centered"

    def __post_init__(self):
        if self.per_axis < 1 or not self.half_width > 0.0:
            raise ValueError("grid needs per_axis >= 1 and half_width > 0")
        if self.layout not in ("centered", "endpoints"):
            raise ValueError("grid layout must be 'centered' or 'endpoints'")

    def axis(self) -> np.ndarray:
        h, k = float(self.half_width), int(self.per_axis)
        if self.layout == "endpoints":
            return np.linspace(-h, h, k) if k > 1 else np.zeros(1)
        step = 2.0 * h / k
        return -h + step * (np.arange(k) + 0.5)

    def points(self, dim: int) -> np.ndarray:
        return np.array(list(itertools.product(self.axis(), repeat=dim)), dtype=float)


@dataclass(frozen=True)
class Scenario:
    name: str
    plant: PlantModel
    Q: np.ndarray
    R: np.ndarray
    basis: QuadraticBasis
    x0: np.ndarray
    xhat0: np.ndarray
    Wa0: np.ndarray
    Wc0: np.ndarray
    Gamma0: np.ndarray
    grid: GridSpec
    gains: Gains
    dt: float = 1e-3
    T: float = 10.0

    def __post_init__(self):
        for key in ("Q", "R", "x0", "xhat0", "Wa0", "Wc0", "Gamma0"):
            object.__setattr__(self, key, np.array(getattr(self, key), dtype=float))
        n2, m, L = 2 * self.plant.n, self.plant.m, self.basis.size
        shapes = {
            "Q": (n2, n2), "R": (m, m), "x0": (n2,), "xhat0": (n2,),
            "Wa0": (L,), "Wc0": (L,), "Gamma0": (L, L),
        }
        for key, shape in shapes.items():
            if getattr(self, key).shape != shape:
                raise ValueError(f"{key} has shape {getattr(self, key).shape}, expected {shape}")
        if self.basis.dim != n2:
            raise ValueError("basis dimension does not match state dimension")
        for key in ("Q", "R", "Gamma0"):
            M = getattr(self, key)
            if not np.allclose(M, M.T) or np.linalg.eigvalsh(M).min() <= 0.0:
                raise ValueError(f"{key} must be symmetric positive definite")
        for key in ("x0", "xhat0"):
            if not self.plant.limits.contains(getattr(self, key)):
                raise ValueError(f"{key} is not strictly inside the barrier limits")

    def state_cost(self, s) -> float:
        return float(s @ self.Q @ s)

    def grid_points(self) -> np.ndarray:
        return self.grid.points(2 * self.plant.n)

    def with_gain(self, name: str, value: float) -> "Scenario":
        return replace(self, gains=self.gains.with_value(name, value))


def transformed_dynamics(s, plant: PlantModel):
    """Return ``(H, F, G)`` with ``s1' = H(s)`` and ``s2' = F(s) + G(s) u``."""
    s = np.asarray(s, dtype=float)
    n = plant.n
    lims = plant.limits
    x = vec_barrier_inverse(s, lims)
    B = vec_rate_factor(s, lims)
    H = B[:n] * x[n:]
    F = B[n:] * plant.f(x)
    G = B[n:, None] * plant.g(x)
    return H, F, G


def transformed_dynamics_at(x, s, plant: PlantModel):
    """Same as :func:`transformed_dynamics` when ``x = b^-1(s)`` is already known."""
    n = plant.n
    B = vec_rate_factor(s, plant.limits)
    return B[:n] * x[n:], B[n:] * plant.f(x), B[n:, None] * plant.g(x)


def linear_toy_plant(lower=(-2.0, -2.0), upper=(2.0, 2.0)) -> PlantModel:
    """Double integrator with position feedback, ``x2' = -x1 + u``."""

    def f(x):
        return np.array([-x[0]])

    def g(x):
        return np.array([[1.0]])

    return PlantModel("linear_toy", 1, 1, f, g, BarrierLimits(lower, upper))


# -- two-state system ---------------------------------------------------------

def two_state_plant(lower=(-7.0, -5.0), upper=(5.0, 7.0)) -> PlantModel:
    def f(x):
        c = math.cos(2.0 * x[0]) + 2.0
        return np.array([-x[0] - 0.5 * x[1] * (1.0 - c * c)])

    def g(x):
        return np.array([[math.cos(2.0 * x[0]) + 2.0]])

    return PlantModel("two_state", 1, 1, f, g, BarrierLimits(lower, upper))


def two_state_scenario() -> Scenario:
    return Scenario(
        name="two_state",
        plant=two_state_plant(),
        Q=10.0 * np.eye(2),
        R=np.array([[0.1]]),
        basis=two_state_basis(),
        x0=np.array([-6.0, 6.0]),
        xhat0=np.array([-6.0, 4.0]),
        Wa0=np.array([10.0, 0.5, 0.5]),
        Wc0=np.array([10.0, 0.5, 0.5]),
        Gamma0=np.eye(3),
        grid=GridSpec(half_width=2.0, per_axis=10),
        gains=Gains(k=10, alpha=1, beta1=5, kc=5, ka1=100, ka2=0.1, beta=1, gamma=1),
        dt=1e-3,
        T=10.0,
    )


def linear_toy_scenario() -> Scenario:
    return Scenario(
        name="linear_toy",
        plant=linear_toy_plant(),
        Q=np.eye(2),
        R=np.array([[1.0]]),
        basis=two_state_basis(),
        x0=np.array([1.0, -0.5]),
        xhat0=np.array([1.0, 0.0]),
        Wa0=np.array([1.0, 0.5, 1.0]),
        Wc0=np.array([1.0, 0.5, 1.0]),
        Gamma0=np.eye(3),
        grid=GridSpec(half_width=1.0, per_axis=5),
        gains=Gains(k=10, alpha=1, beta1=5, kc=5, ka1=100, ka2=0.1, beta=1, gamma=1),
        dt=1e-3,
        T=10.0,
    )


# -- two-link manipulator -----------------------------------------------------

MANIPULATOR_PARAMS = {
    "p1": 3.473,
    "p2": 0.196,
    "p3": 0.242,
    "fd": (5.3, 1.1),
    "fs": (8.45, 2.35),
}


def inertia_matrix(x, p1, p2, p3) -> np.ndarray:
    c2 = math.cos(x[1])
    return np.array([[p1 + 2.0 * p3 * c2, p2 + p3 * c2], [p2 + p3 * c2, p2]])


def coriolis_matrix(x, p3) -> np.ndarray:
    s2 = math.sin(x[1])
    return np.array([
        [-p3 * s2 * x[3], -p3 * s2 * (x[2] + x[3])],
        [p3 * s2 * x[2], 0.0],
    ])


def manipulator_plant(lower=(-1.0, -1.0, -2.0, -2.0), upper=(1.0, 1.0, 2.0, 2.0), **params) -> PlantModel:
    p = {**MANIPULATOR_PARAMS, **params}
    p1, p2, p3 = float(p["p1"]), float(p["p2"]), float(p["p3"])
    fd = np.array(p["fd"], dtype=float)
    fs = np.array(p["fs"], dtype=float)

    def _inv_inertia(x):
        c2 = math.cos(x[1])
        m11, m12, m22 = p1 + 2.0 * p3 * c2, p2 + p3 * c2, p2
        det = m11 * m22 - m12 * m12
        return np.array([[m22, -m12], [-m12, m11]]) / det

    def f(x):
        v = x[2:]
        torque = coriolis_matrix(x, p3) @ v + fd * v + fs * np.tanh(v)
        return -(_inv_inertia(x) @ torque)

    def g(x):
        return _inv_inertia(x)

    params_out = {"p1": p1, "p2": p2, "p3": p3, "fd": tuple(fd), "fs": tuple(fs)}
    return PlantModel("manipulator", 2, 2, f, g, BarrierLimits(lower, upper), params_out)


def manipulator_scenario() -> Scenario:
    return Scenario(
        name="manipulator",
        plant=manipulator_plant(),
        Q=10.0 * np.eye(4),
        R=np.eye(2),
        basis=manipulator_basis(),
        x0=np.array([-0.5, -0.5, 1.0, 1.0]),
        xhat0=np.array([-0.5, -0.5, 1.1, 1.1]),
        Wa0=np.array([5.0, 15.0, 0.0, 0.0, 10.0, 2.0, 15.0, 5.0, 2.0, 2.0]),
        Wc0=np.array([15.0, 15.0, 0.0, 0.0, 12.0, 2.0, 15.0, 8.0, 2.0, 2.0]),
        Gamma0=10.0 * np.eye(10),
        grid=GridSpec(half_width=0.45, per_axis=5),
        gains=Gains(k=50, alpha=1, beta1=10, kc=1000, ka1=100, ka2=0.5, beta=0.001, gamma=500),
        # the learning transient drives x2_2 close to its limit; RK4 needs the smaller step
        dt=2e-4,
        T=10.0,
    )


SCENARIOS = {
    "two_state": two_state_scenario,
    "manipulator": manipulator_scenario,
    "linear_toy": linear_toy_scenario,
}
PLANTS = {"two_state": two_state_plant, "manipulator": manipulator_plant, "linear_toy": linear_toy_plant}


def load_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
