"""Verification suites run by ``barrier-adp verify``.

Each suite returns a list of :class:`Check` records; a suite passes when
every check does.  Long closed-loop runs are shared through :class:`Runs`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .config import RunConfig
from .learner import policy
from .plants import Scenario, linear_toy_plant, load_scenario
from .sim import (
    SimConfig,
    SimLog,
    StepRejected,
    filter_equivalence_check,
    lemma1_check,
    lemma2_check,
    run_closed_loop,
)

LEMMA_TOL = 1e-5
FILTER_TOL = 1e-6
EQUIV_HORIZON = 5.0


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        text = f"[{mark}] {self.name}: {self.value:.6g} (threshold {self.threshold:.3g})"
        return f"{text} {self.detail}".rstrip()


def _below(name: str, value: float, tol: float, detail: str = "") -> Check:
    return Check(name, value, tol, bool(np.isfinite(value) and value < tol), detail)


def _above(name: str, value: float, floor: float, detail: str = "") -> Check:
    return Check(name, value, floor, bool(np.isfinite(value) and value > floor), detail)


class Runs:
    """Lazily computed closed-loop runs shared between suites."""

    def __init__(self, run_config: RunConfig):
        self.rc = run_config
        self._nominal: Optional[SimLog] = None

    @property
    def scenario(self) -> Scenario:
        return self.rc.scenario

    def nominal(self) -> SimLog:
        if self._nominal is None:
            self._nominal = run_closed_loop(self.rc.scenario, self.rc.sim)
        return self._nominal


def random_safe_ics(scenario: Scenario, count: int, seed: int, shrink: float = 0.8,
                    estimate_spread: float = 0.25):
    """Initial conditions drawn uniformly from the shrunken box, with the
    velocity estimate perturbed by up to ``estimate_spread`` of its range."""
    rng = np.random.default_rng(seed)
    lims = scenario.plant.limits
    n = scenario.plant.n
    lo, hi = shrink * lims.lower, shrink * lims.upper
    out = []
    for _ in range(count):
        x0 = rng.uniform(lo, hi)
        xhat0 = x0.copy()
        span = hi[n:] - lo[n:]
        xhat0[n:] = np.clip(x0[n:] + estimate_spread * span * rng.uniform(-0.5, 0.5, n), lo[n:], hi[n:])
        out.append((x0, xhat0))
    return out


def _equiv_cfg(rc: RunConfig) -> SimConfig:
    return replace(rc.sim, T=min(EQUIV_HORIZON, rc.sim.T))


def suite_lemma1(runs: Runs, seed: int = 0) -> list[Check]:
    cfg = replace(_equiv_cfg(runs.rc), dt=1e-3)
    checks = []
    toy = linear_toy_plant()
    dev = lemma1_check(toy, lambda s, t: np.zeros(1), np.array([1.0, -0.5]), cfg)
    checks.append(_below("trajectory equivalence, linear toy, zero input", dev, 1e-6))
    dev = lemma1_check(toy, lambda s, t: np.array([-s[0] - 2.0 * s[1] + 0.3 * np.sin(t)]),
                       np.array([1.0, -0.5]), cfg)
    checks.append(_below("trajectory equivalence, linear toy, time-varying feedback", dev, LEMMA_TOL))
    sc = load_scenario("two_state")
    W = sc.Wc0

    def zeta(s, t):
        return policy(s, W, sc.plant, sc.basis, sc.R)

    dev = lemma1_check(sc.plant, zeta, sc.x0, cfg)
    checks.append(_below("trajectory equivalence, two-state, frozen policy", dev, LEMMA_TOL))
    if runs.scenario.name not in ("two_state", "linear_toy"):
        sc = runs.scenario
        dev = lemma1_check(sc.plant, lambda s, t: policy(s, sc.Wc0, sc.plant, sc.basis, sc.R), sc.x0, cfg)
        checks.append(_below(f"trajectory equivalence, {sc.name}, frozen policy", dev, LEMMA_TOL))
    return checks


def suite_lemma2(runs: Runs, seed: int = 0) -> list[Check]:
    checks = []
    names = ["linear_toy", "two_state"]
    if runs.scenario.name not in names:
        names.append(runs.scenario.name)
    for name in names:
        sc = runs.scenario if name == runs.scenario.name else load_scenario(name)
        cfg = replace(_equiv_cfg(runs.rc), dt=runs.rc.sim.dt if name == runs.scenario.name else 1e-3)
        try:
            dev = lemma2_check(sc, cfg)
        except StepRejected as exc:
            checks.append(Check(f"estimator equivalence, {name}", float("nan"), LEMMA_TOL, False, str(exc)))
            continue
        checks.append(_below(f"estimator equivalence, {name}, learning run", dev, LEMMA_TOL))
    return checks


def suite_filter(runs: Runs, seed: int = 0) -> list[Check]:
    sc = runs.scenario
    cfg = _equiv_cfg(runs.rc)
    try:
        dev = filter_equivalence_check(sc, cfg)
    except StepRejected as exc:
        return [Check(f"filter equivalence {sc.name}", float("nan"), FILTER_TOL, False, str(exc))]
    return [_below(f"filter equivalence {sc.name}", dev, FILTER_TOL)]


def suite_safety(runs: Runs, seed: int = 0, n_random: int = 10) -> list[Check]:
    sc = runs.scenario
    lims = sc.plant.limits
    log = runs.nominal()
    checks = [Check(f"safety {sc.name} nominal: violations in {log.t.size} rows",
                    float(log.safety_violations(lims.lower, lims.upper)), 0.0,
                    (not log.diverged) and log.safety_violations(lims.lower, lims.upper) == 0,
                    f"status={log.status}")]
    for i, (x0, xhat0) in enumerate(random_safe_ics(sc, n_random, seed)):
        r = run_closed_loop(sc, runs.rc.sim, x0=x0, xhat0=xhat0)
        bad = r.safety_violations(lims.lower, lims.upper)
        checks.append(Check(f"safety {sc.name} random IC {i}: violations", float(bad), 0.0,
                            (not r.diverged) and bad == 0, f"status={r.status} {r.reason}".rstrip()))
    return checks


def suite_gamma(runs: Runs, seed: int = 0) -> list[Check]:
    log = runs.nominal()
    lo, hi = float(np.min(log.gamma_min)), float(np.max(log.gamma_max))
    return [_above(f"gamma lower bound {runs.scenario.name}", lo, 0.0,
                   f"observed eigenvalue range [{lo:.4g}, {hi:.4g}]; status={log.status}")]


def suite_pe(runs: Runs, seed: int = 0) -> list[Check]:
    log = runs.nominal()
    return [_above(f"pe metric minimum {runs.scenario.name}", float(np.min(log.pe)), 0.0,
                   f"status={log.status}")]


SUITES: dict[str, Callable[..., list[Check]]] = {
    "lemma1": suite_lemma1,
    "lemma2": suite_lemma2,
    "filter-equivalence": suite_filter,
    "safety": suite_safety,
    "gamma-bounds": suite_gamma,
    "pe-metric": suite_pe,
}


def run_suite(name: str, runs: Runs, seed: int = 0) -> list[Check]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](runs, seed=seed)
