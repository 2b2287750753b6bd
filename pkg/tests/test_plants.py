import math
from dataclasses import replace

import numpy as np
import pytest

from barrier_adp.barrier import rate_factor, vec_barrier
from barrier_adp.plants import (
    Gains,
    GridSpec,
    coriolis_matrix,
    inertia_matrix,
    load_scenario,
    manipulator_plant,
    transformed_dynamics,
    transformed_dynamics_at,
    two_state_plant,
)


def test_two_state_maps():
    p = two_state_plant()
    assert np.array_equal(p.f(np.zeros(2)), [0.0])
    assert p.g(np.zeros(2))[0, 0] == 3.0
    expected = 6.0 - 3.0 * (1.0 - (math.cos(-12.0) + 2.0) ** 2)
    assert p.f(np.array([-6.0, 6.0]))[0] == pytest.approx(expected, rel=1e-14)


def test_two_state_scenario_constants(two_state):
    sc = two_state
    assert np.array_equal(sc.plant.limits.lower, [-7.0, -5.0])
    assert np.array_equal(sc.plant.limits.upper, [5.0, 7.0])
    assert np.array_equal(sc.Q, 10 * np.eye(2)) and sc.R[0, 0] == 0.1
    assert np.array_equal(sc.x0, [-6.0, 6.0]) and np.array_equal(sc.xhat0, [-6.0, 4.0])
    assert np.array_equal(sc.Wa0, [10.0, 0.5, 0.5]) and np.array_equal(sc.Wc0, sc.Wa0)
    assert np.array_equal(sc.Gamma0, np.eye(3))
    g = sc.gains
    assert (g.k, g.alpha, g.beta1, g.kc, g.ka1, g.ka2, g.beta, g.gamma) == (10, 1, 5, 5, 100, 0.1, 1, 1)
    pts = sc.grid_points()
    assert pts.shape == (100, 2)
    assert np.all(np.abs(pts) <= 2.0)


def test_transformed_dynamics_at_origin(two_state, manipulator):
    for sc in (two_state, manipulator):
        n = sc.plant.n
        H, F, G = transformed_dynamics(np.zeros(2 * n), sc.plant)
        assert np.array_equal(H, np.zeros(n)) and np.array_equal(F, np.zeros(n))
        assert np.linalg.matrix_rank(G) == sc.plant.m


def test_two_state_G_at_origin(two_state):
    _, _, G = transformed_dynamics(np.zeros(2), two_state.plant)
    B2 = (25.0 + 70.0 + 49.0) / (7.0 * 25.0 + 5.0 * 49.0)
    assert B2 == pytest.approx(rate_factor(0.0, (-5.0, 7.0)), rel=1e-15)
    assert G[0, 0] == pytest.approx(3.0 * B2, rel=1e-14)


@pytest.mark.parametrize("name", ["two_state", "manipulator"])
def test_chain_rule_along_flow(name, rng):
    sc = load_scenario(name)
    p, lims, n = sc.plant, sc.plant.limits, sc.plant.n
    h = 1e-6
    for _ in range(10):
        x = rng.uniform(0.8 * lims.lower, 0.8 * lims.upper)
        u = rng.normal(size=p.m)
        s = vec_barrier(x, lims)
        H, F, G = transformed_dynamics(s, p)
        fd = (vec_barrier(x + h * p.flow(x, u), lims) - vec_barrier(x - h * p.flow(x, u), lims)) / (2 * h)
        assert np.allclose(H, fd[:n], atol=1e-4, rtol=1e-6)
        assert np.allclose(F + G @ u, fd[n:], atol=1e-4, rtol=1e-6)
        H2, F2, G2 = transformed_dynamics_at(x, s, p)
        assert np.allclose(H, H2) and np.allclose(F, F2) and np.allclose(G, G2)


def test_manipulator_matrices():
    P = dict(p1=3.473, p2=0.196, p3=0.242)
    M = inertia_matrix(np.zeros(4), **P)
    assert np.allclose(M, [[3.957, 0.438], [0.438, 0.196]], atol=1e-12)
    assert np.array_equal(coriolis_matrix(np.array([0.3, -0.2, 0.0, 0.0]), P["p3"]), np.zeros((2, 2)))
    for q2 in np.linspace(-1.0, 1.0, 41):
        ev = np.linalg.eigvalsh(inertia_matrix(np.array([0.0, q2, 0.0, 0.0]), **P))
        assert ev.min() > 0.0


def test_manipulator_dynamics(manipulator, rng):
    p = manipulator.plant
    assert np.array_equal(p.f(np.zeros(4)), np.zeros(2))
    for _ in range(10):
        x = rng.uniform(p.limits.lower, p.limits.upper)
        M = inertia_matrix(x, 3.473, 0.196, 0.242)
        assert np.allclose(p.g(x), np.linalg.inv(M), rtol=1e-12)
        v = x[2:]
        torque = coriolis_matrix(x, 0.242) @ v + np.array([5.3, 1.1]) * v + np.array([8.45, 2.35]) * np.tanh(v)
        assert np.allclose(p.f(x), -np.linalg.solve(M, torque), rtol=1e-12)


def test_manipulator_scenario_constants(manipulator):
    sc = manipulator
    assert np.array_equal(sc.plant.limits.lower, [-1, -1, -2, -2])
    assert np.array_equal(sc.Q, 10 * np.eye(4)) and np.array_equal(sc.R, np.eye(2))
    assert np.array_equal(sc.Wa0, [5, 15, 0, 0, 10, 2, 15, 5, 2, 2])
    assert np.array_equal(sc.Wc0, [15, 15, 0, 0, 12, 2, 15, 8, 2, 2])
    assert np.array_equal(sc.Gamma0, 10 * np.eye(10))
    pts = sc.grid_points()
    assert pts.shape == (625, 4) and np.all(np.abs(pts) <= 0.45)
    g = sc.gains
    assert (g.k, g.alpha, g.beta1, g.kc, g.ka1, g.ka2, g.beta, g.gamma) == (50, 1, 10, 1000, 100, 0.5, 0.001, 500)


@pytest.mark.parametrize("name", ["two_state", "manipulator"])
def test_lipschitz_spot_check(name, rng):
    p = load_scenario(name).plant
    lo, hi = p.limits.lower, p.limits.upper
    slopes = []
    for _ in range(200):
        x = rng.uniform(lo, hi)
        y = x + rng.normal(scale=1e-3, size=x.size)
        if not p.limits.contains(y):
            continue
        d = np.linalg.norm(x - y)
        slopes.append(max(np.linalg.norm(p.f(x) - p.f(y)), np.linalg.norm(p.g(x) - p.g(y))) / d)
    assert np.isfinite(max(slopes)) and max(slopes) < 1e3


def test_grid_layouts():
    c = GridSpec(2.0, 10).axis()
    assert np.allclose(np.diff(c), 0.4) and c[0] == pytest.approx(-1.8)
    e = GridSpec(2.0, 10, "endpoints").axis()
    assert e[0] == -2.0 and e[-1] == 2.0
    assert GridSpec(0.45, 5).points(4).shape == (625, 4)
    with pytest.raises(ValueError):
        GridSpec(2.0, 10, "random")
    with pytest.raises(ValueError):
        GridSpec(-1.0, 3)


def test_scenario_validation(two_state):
    with pytest.raises(ValueError, match="Q"):
        replace(two_state, Q=-np.eye(2))
    with pytest.raises(ValueError, match="x0"):
        replace(two_state, x0=np.array([-8.0, 0.0]))
    with pytest.raises(ValueError, match="Wa0"):
        replace(two_state, Wa0=np.zeros(4))


def test_gains():
    g = Gains(1, 1, 2, 1, 1, 1, 1, 1)
    assert g.with_value("v", 3.0).gamma == 3.0
    with pytest.raises(KeyError):
        g.with_value("nope", 1.0)
    with pytest.raises(ValueError):
        Gains(1, 1, 2, 1, 1, 1, 1, 0.0)


def test_manipulator_params_override():
    p = manipulator_plant(p1=4.0)
    assert p.params["p1"] == 4.0
    x = np.array([0.0, 0.0, 0.0, 0.0])
    assert not np.allclose(p.g(x), manipulator_plant().g(x))
