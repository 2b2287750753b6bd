import numpy as np
import pytest

from barrier_adp.barrier import BarrierDomainError, BarrierLimits, barrier, vec_barrier, vec_rate_factor
from barrier_adp.estimator import (
    EstimatorState,
    estimator_derivatives,
    estimator_rates,
    eta,
    eta_from,
    nu1,
    nu1_from,
    transformed_estimate,
)
from barrier_adp.plants import Gains

G1 = Gains(k=1, alpha=1, beta1=2, kc=1, ka1=1, ka2=1, beta=1, gamma=1)


def test_eta_zero_at_start(two_state):
    sc = two_state
    est = EstimatorState.initial(sc.x0[:1], sc.xhat0, sc.plant.limits)
    assert np.array_equal(est.etabar, [0.0])
    assert np.array_equal(eta(est, sc.x0[:1], sc.gains, sc.plant.limits), [0.0])


def test_eta_equals_etabar_when_matched(two_state):
    lims = two_state.plant.limits
    est = EstimatorState(np.array([-1.0, 2.0]), np.array([0.37]), np.zeros(1))
    assert eta(est, np.array([-1.0]), two_state.gains, lims)[0] == pytest.approx(0.37, abs=1e-15)


def test_eta_scalar_arithmetic():
    assert eta_from(np.array([0.2]), np.array([0.1]), np.zeros(1), G1)[0] == pytest.approx(0.0, abs=1e-15)


def test_nu1_examples(two_state):
    lims = BarrierLimits([-1.0], [1.0])
    assert nu1_from(np.zeros(1), np.zeros(1), np.zeros(1), G1, lims)[0] == 0.0
    assert nu1_from(np.array([0.1]), np.zeros(1), np.zeros(1), G1, lims)[0] == pytest.approx(0.05, rel=1e-14)
    base = nu1_from(np.zeros(1), np.array([0.3]), np.zeros(1), G1, lims)
    double = nu1_from(np.zeros(1), np.array([0.6]), np.zeros(1), G1, lims)
    assert double[0] == pytest.approx(2 * base[0], rel=1e-15)
    est = EstimatorState(np.array([0.4, -1.0]), np.zeros(1), np.zeros(1))
    assert nu1(est, np.array([0.4]), two_state.gains, two_state.plant.limits)[0] == 0.0


def test_derivatives_at_equilibrium(two_state):
    est = EstimatorState(np.zeros(2), np.zeros(1), np.zeros(1))
    d1, d2, de = estimator_derivatives(est, np.zeros(1), np.zeros(1), two_state.plant, two_state.gains)
    assert np.array_equal(np.concatenate([d1, d2, de]), np.zeros(3))


def test_position_rate_is_velocity_estimate(two_state, rng):
    sc = two_state
    for _ in range(20):
        xhat = rng.uniform(0.9 * sc.plant.limits.lower, 0.9 * sc.plant.limits.upper)
        est = EstimatorState(xhat, rng.normal(size=1), rng.normal(size=1))
        gains = sc.gains.with_value("k", float(rng.uniform(1, 100)))
        d1, _, _ = estimator_derivatives(est, np.array([rng.uniform(-6, 4)]), rng.normal(size=1), sc.plant, gains)
        assert np.array_equal(d1, xhat[1:])


def test_derivatives_do_not_mutate(two_state):
    est = EstimatorState.initial(two_state.x0[:1], two_state.xhat0, two_state.plant.limits)
    before = (est.xhat.copy(), est.etabar.copy(), est.snapshot.copy())
    estimator_derivatives(est, np.array([-5.9]), np.array([1.0]), two_state.plant, two_state.gains)
    assert all(np.array_equal(a, b) for a, b in zip(before, (est.xhat, est.etabar, est.snapshot)))


def test_transformed_estimate(two_state):
    lims = two_state.plant.limits
    assert np.array_equal(transformed_estimate(EstimatorState(np.zeros(2), np.zeros(1), np.zeros(1)), lims), [0, 0])
    est = EstimatorState(np.array([-6.0, 4.0]), np.zeros(1), np.zeros(1))
    s = transformed_estimate(est, lims)
    assert s[0] == pytest.approx(barrier(-6.0, (-7.0, 5.0)), rel=1e-15)
    assert s[1] == pytest.approx(barrier(4.0, (-5.0, 7.0)), rel=1e-15)
    with pytest.raises(BarrierDomainError):
        transformed_estimate(EstimatorState(np.array([0.0, 7.5]), np.zeros(1), np.zeros(1)), lims)


@pytest.mark.parametrize("name", ["two_state", "manipulator"])
def test_algebraic_filter_rate_matches_dynamic_filter(name, rng):
    """d/dt of the algebraic eta equals the dynamic-filter right-hand side."""
    from barrier_adp.plants import load_scenario

    sc = load_scenario(name)
    p, g, n = sc.plant, sc.gains, sc.plant.n
    lims1 = p.limits[:n]
    for _ in range(20):
        x = rng.uniform(0.8 * p.limits.lower, 0.8 * p.limits.upper)
        xhat = rng.uniform(0.8 * p.limits.lower, 0.8 * p.limits.upper)
        etabar, snap = rng.normal(size=n), rng.normal(size=n)
        u = rng.normal(size=p.m)
        _, detabar, eta_val = estimator_rates(xhat, etabar, snap, x[:n], u, p, g)
        s_err = vec_barrier(x[:n], lims1) - vec_barrier(xhat[:n], lims1)
        ds_err = vec_rate_factor(vec_barrier(x[:n], lims1), lims1) * x[n:] \
            - vec_rate_factor(vec_barrier(xhat[:n], lims1), lims1) * xhat[n:]
        deta_alg = detabar - (g.k + g.alpha) * ds_err
        r = ds_err + g.alpha * s_err + eta_val
        deta_dyn = -g.beta1 * eta_val - g.k * r - g.alpha * ds_err
        assert np.allclose(deta_alg, deta_dyn, rtol=1e-12, atol=1e-9)


def test_estimate_outside_box_raises(two_state):
    with pytest.raises(BarrierDomainError):
        estimator_rates(np.array([-7.5, 0.0]), np.zeros(1), np.zeros(1), np.array([-6.0]), np.zeros(1),
                        two_state.plant, two_state.gains)
