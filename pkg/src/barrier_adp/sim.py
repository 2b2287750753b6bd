"""Fixed-step simulation of plant, estimator and learner as one augmented ODE.

Augmented state layout (``n`` outputs, ``L`` features)::

    x (2n) | xhat (2n) | etabar (n) | Wc (L) | Gamma (L*L) | Wa (L) | J (1)

optionally followed by shadow states used only by the equivalence checks::

    shat_t (2n) | etabar_t (n) | eta_f (n)

The controller, estimator and learner only ever receive ``x[:n]``.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .barrier import BOUNDARY_TOL, BarrierDomainError, vec_barrier, vec_barrier_inverse, vec_rate_factor
from .estimator import eta_from, estimator_rates, nu1_from
from .learner import GridCache, gamma_eig_bounds, pe_metric, policy_from_parts, value
from .plants import Gains, PlantModel, Scenario, transformed_dynamics

CONVERGED = "Converged"
HORIZON = "HorizonReached"
DIVERGED = "Diverged"


class StepRejected(Exception):
    """An RK4 stage left the barrier domain or produced non-finite values."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    T: float = 10.0
    weight_cap: float = 1e6
    barrier_margin: float = BOUNDARY_TOL
    decimation: int = 10
    converge_tol: float = 1e-3
    # estimator start for frozen-weight evaluation: "matched" (xhat0 = x0) or "scenario"
    eval_estimator_init: str = "matched"

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError("sim.dt must be positive")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValueError("sim.T must be positive")
        if not self.barrier_margin > 0.0:
            raise ValueError("sim.barrier_margin must be positive")
        if not self.weight_cap > 0.0:
            raise ValueError("sim.weight_cap must be positive")
        if int(self.decimation) < 1:
            raise ValueError("sim.decimation must be >= 1")
        if self.eval_estimator_init not in ("matched", "scenario"):
            raise ValueError("sim.eval_estimator_init must be 'matched' or 'scenario'")

    @classmethod
    def for_scenario(cls, scenario: Scenario, **overrides) -> "SimConfig":
        return cls(**{"dt": scenario.dt, "T": scenario.T, **overrides})

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


def rk4_step(rates: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step; raises :class:`StepRejected` on failure."""
    try:
        k1 = rates(y)
        k2 = rates(y + 0.5 * dt * k1)
        k3 = rates(y + 0.5 * dt * k2)
        k4 = rates(y + dt * k3)
    except BarrierDomainError as exc:
        raise StepRejected("BarrierExit", str(exc)) from exc
    except FloatingPointError as exc:
        raise StepRejected("NonFinite", str(exc)) from exc
    y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_new)):
        raise StepRejected("NonFinite", "state contains inf/nan")
    return y_new


@dataclass
class SimLog:
    """Decimated time series of one run plus its terminal status."""

    scenario: str
    n: int
    m: int
    L: int
    gains: dict
    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    s: np.ndarray
    shat: np.ndarray
    u: np.ndarray
    Wc: np.ndarray
    Wa: np.ndarray
    gamma_min: np.ndarray
    gamma_max: np.ndarray
    pe: np.ndarray
    cost: np.ndarray
    vse: np.ndarray
    eta: np.ndarray
    status: str
    reason: str = ""
    detail: str = ""
    final_t: float = 0.0
    final_cost: float = 0.0
    final_Wc: Optional[np.ndarray] = None
    final_Wa: Optional[np.ndarray] = None
    final_Gamma: Optional[np.ndarray] = None
    final_state: Optional[np.ndarray] = None
    runtime: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return self.status == DIVERGED

    def csv_header(self) -> list[str]:
        n2 = 2 * self.n
        cols = ["t"]
        cols += [f"x_{i + 1}" for i in range(n2)]
        cols += [f"xhat_{i + 1}" for i in range(n2)]
        cols += [f"s_{i + 1}" for i in range(n2)]
        cols += [f"shat_{i + 1}" for i in range(n2)]
        cols += [f"u_{i + 1}" for i in range(self.m)]
        cols += [f"Wc_{i + 1}" for i in range(self.L)]
        cols += [f"Wa_{i + 1}" for i in range(self.L)]
        cols += ["gamma_min_eig", "pe_metric", "cost", "V_se"]
        return cols

    def rows(self) -> np.ndarray:
        return np.column_stack([
            self.t, self.x, self.xhat, self.s, self.shat, self.u, self.Wc, self.Wa,
            self.gamma_min, self.pe, self.cost, self.vse,
        ])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.csv_header())
        for row in self.rows():
            writer.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def safety_violations(self, lower, upper) -> int:
        """Logged samples (rows) where any component of x is on or outside the box."""
        if self.x.size == 0:
            return 0
        bad = np.any((self.x <= lower) | (self.x >= upper), axis=1)
        return int(np.count_nonzero(bad))


class ClosedLoop:
    """Right-hand side of the augmented closed-loop ODE for one scenario."""

    def __init__(self, scenario: Scenario, gains: Optional[Gains] = None, learn: bool = True,
                 W_fixed=None, shadow: bool = False, cache: Optional[GridCache] = None,
                 grid_points=None):
        self.scenario = scenario
        self.plant: PlantModel = scenario.plant
        self.gains = gains if gains is not None else scenario.gains
        self.basis = scenario.basis
        self.learn = learn
        self.shadow = shadow
        n, L = self.plant.n, self.basis.size
        self.n, self.m, self.L = n, self.plant.m, L
        self.lims = self.plant.limits
        self.lims1 = self.lims[:n]
        self.lims2 = self.lims[n:]
        self.Q = scenario.Q
        self.R = scenario.R
        self.Rinv = np.linalg.inv(scenario.R)
        if W_fixed is not None:
            W_fixed = np.array(W_fixed, dtype=float).ravel()
            if W_fixed.size != L:
                raise ValueError(f"fixed weights have {W_fixed.size} entries, basis has {L}")
        self.W_fixed = W_fixed
        if learn:
            if cache is None:
                pts = scenario.grid_points() if grid_points is None else grid_points
                cache = GridCache.build(pts, self.plant, self.basis, self.Q, self.R)
            self.cache = cache
        else:
            self.cache = cache

        o = 0
        self.ix = slice(o, o + 2 * n); o += 2 * n
        self.ixh = slice(o, o + 2 * n); o += 2 * n
        self.ieb = slice(o, o + n); o += n
        self.iwc = slice(o, o + L); o += L
        self.ig = slice(o, o + L * L); o += L * L
        self.iwa = slice(o, o + L); o += L
        self.ij = o; o += 1
        self.base_size = o
        if shadow:
            self.ish = slice(o, o + 2 * n); o += 2 * n
            self.iebt = slice(o, o + n); o += n
            self.ief = slice(o, o + n); o += n
        self.size = o
        self.snapshot = np.zeros(n)

    # -- state packing --------------------------------------------------------

    def initial_state(self, x0=None, xhat0=None, Wc0=None, Gamma0=None, Wa0=None) -> np.ndarray:
        sc = self.scenario
        x0 = np.array(sc.x0 if x0 is None else x0, dtype=float)
        xhat0 = np.array(sc.xhat0 if xhat0 is None else xhat0, dtype=float)
        n = self.n
        self.snapshot = vec_barrier(x0[:n], self.lims1) - vec_barrier(xhat0[:n], self.lims1)
        y = np.zeros(self.size)
        y[self.ix] = x0
        y[self.ixh] = xhat0
        y[self.iwc] = sc.Wc0 if Wc0 is None else Wc0
        y[self.ig] = (sc.Gamma0 if Gamma0 is None else np.asarray(Gamma0)).ravel()
        y[self.iwa] = sc.Wa0 if Wa0 is None else Wa0
        if self.shadow:
            y[self.ish] = vec_barrier(xhat0, self.lims)
        return y

    def unpack(self, y):
        L = self.L
        return (y[self.ix], y[self.ixh], y[self.ieb], y[self.iwc],
                y[self.ig].reshape(L, L), y[self.iwa], y[self.ij])

    # -- pieces ---------------------------------------------------------------

    def control(self, shat, xhat, Wa) -> np.ndarray:
        W = Wa if self.W_fixed is None else self.W_fixed
        n = self.n
        G = vec_rate_factor(shat[n:], self.lims2)[:, None] * self.plant.g(xhat)
        return policy_from_parts(shat, G, W, self.basis, self.Rinv, n)

    def controller_rates(self, y_meas, xhat, etabar, Wc, Gamma, Wa):
        """Estimator, control and learner rates from the measured output only."""
        shat = vec_barrier(xhat, self.lims)
        u = self.control(shat, xhat, Wa)
        dxhat, detabar, eta = estimator_rates(
            xhat, etabar, self.snapshot, y_meas, u, self.plant, self.gains, self.lims1)
        if self.learn:
            dWc, dG, dWa = self._learner(Wc, Gamma, Wa)
        else:
            dWc = dWa = np.zeros(self.L)
            dG = np.zeros((self.L, self.L))
        return u, shat, dxhat, detabar, eta, dWc, dG, dWa

    def _learner(self, Wc, Gamma, Wa):
        from . import kernels

        c, g = self.cache, self.gains
        return kernels.learner_rates(
            c.omega0, c.C, c.q, c.R, c.Rinv, np.ascontiguousarray(Wc),
            np.ascontiguousarray(Gamma), np.ascontiguousarray(Wa),
            g.kc, g.ka1, g.ka2, g.beta, g.gamma)

    def rates(self, y: np.ndarray) -> np.ndarray:
        x, xhat, etabar, Wc, Gamma, Wa, _ = self.unpack(y)
        n = self.n
        y_meas = x[:n].copy()
        u, shat, dxhat, detabar, eta, dWc, dG, dWa = self.controller_rates(
            y_meas, xhat, etabar, Wc, Gamma, Wa)
        s = vec_barrier(x, self.lims)
        dy = np.empty(self.size)
        dy[self.ix] = self.plant.flow(x, u)
        dy[self.ixh] = dxhat
        dy[self.ieb] = detabar
        dy[self.iwc] = dWc
        dy[self.ig] = dG.ravel()
        dy[self.iwa] = dWa
        dy[self.ij] = s @ self.Q @ s + u @ self.R @ u
        if self.shadow:
            self._shadow_rates(y, x, s, shat, xhat, eta, u, dy)
        return dy

    def _shadow_rates(self, y, x, s, shat, xhat, eta, u, dy):
        """Transformed-coordinate estimator and derivative-driven filter (test oracles)."""
        n, g = self.n, self.gains
        # estimator integrated directly in barrier coordinates
        st = y[self.ish]
        H_t, F_t, G_t = transformed_dynamics(st, self.plant)
        s_err_t = s[:n] - st[:n]
        eta_t = eta_from(y[self.iebt], s_err_t, self.snapshot, g)
        nu1_t = nu1_from(s_err_t, eta_t, st[:n], g, self.lims1)
        nu2_t = vec_rate_factor(st[n:], self.lims2) * nu1_t
        dy[self.ish] = np.concatenate([H_t, F_t + G_t @ u + nu2_t])
        dy[self.iebt] = -(g.k + g.beta1) * eta_t - g.k * g.alpha * s_err_t
        # filter driven by the true derivative of the position error
        B1 = vec_rate_factor(s[:n], self.lims1)
        B1h = vec_rate_factor(shat[:n], self.lims1)
        ds_err = B1 * x[n:] - B1h * xhat[n:]
        s_err = s[:n] - shat[:n]
        eta_f = y[self.ief]
        r = ds_err + g.alpha * s_err + eta_f
        dy[self.ief] = -g.beta1 * eta_f - g.k * r - g.alpha * ds_err


def _vse(x, xhat, s, shat, eta, n, lims1, alpha) -> float:
    s_err = s[:n] - shat[:n]
    ds_err = vec_rate_factor(s[:n], lims1) * x[n:] - vec_rate_factor(shat[:n], lims1) * xhat[n:]
    r = ds_err + alpha * s_err + eta
    return float(0.5 * alpha * alpha * s_err @ s_err + 0.5 * r @ r + 0.5 * eta @ eta)


def simulate(system: ClosedLoop, cfg: SimConfig, y0: Optional[np.ndarray] = None,
             on_step: Optional[Callable] = None) -> SimLog:
    """Integrate ``system`` from ``y0`` for ``cfg.T`` seconds and return the log."""
    start = time.perf_counter()
    sc = system.scenario
    n, m, L = system.n, system.m, system.L
    y = system.initial_state() if y0 is None else np.array(y0, dtype=float)
    dt = cfg.dt
    n_steps = cfg.n_steps
    dec = int(cfg.decimation)
    lims = system.lims
    rows: list[tuple] = []
    W_log_fixed = system.W_fixed

    def record(t, y):
        x, xhat, etabar, Wc, Gamma, Wa, J = system.unpack(y)
        s = vec_barrier(x, lims)
        shat = vec_barrier(xhat, lims)
        u = system.control(shat, xhat, Wa)
        s_err = s[:n] - shat[:n]
        eta = eta_from(etabar, s_err, system.snapshot, system.gains)
        gmin, gmax = gamma_eig_bounds(Gamma)
        W_pe = Wa if W_log_fixed is None else W_log_fixed
        pe = pe_metric(system.cache, W_pe, system.gains.gamma) if system.cache is not None else float("nan")
        vse = _vse(x, xhat, s, shat, eta, n, system.lims1, system.gains.alpha)
        rows.append((t, x.copy(), xhat.copy(), s, shat, u, Wc.copy(), Wa.copy(),
                     gmin, gmax, pe, float(J), vse, eta))

    status, reason, detail = HORIZON, "", ""
    t = 0.0
    record(t, y)
    ig = system.ig
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(1, n_steps + 1):
            try:
                y_new = rk4_step(system.rates, y, dt)
                x_new = y_new[system.ix]
                xh_new = y_new[system.ixh]
                margin = cfg.barrier_margin
                if not (lims.contains(x_new, margin) and lims.contains(xh_new, margin)):
                    raise StepRejected("BarrierExit", f"state left the box at t={i * dt:.6g}")
            except StepRejected as exc:
                status, reason, detail = DIVERGED, exc.reason, exc.detail
                break
            G = y_new[ig].reshape(L, L)
            y_new[ig] = (0.5 * (G + G.T)).ravel()
            y = y_new
            t = i * dt
            wmax = max(np.max(np.abs(y[system.iwc])), np.max(np.abs(y[system.iwa])))
            if wmax > cfg.weight_cap:
                status, reason, detail = DIVERGED, "WeightCap", f"|W|_inf={wmax:.3g} at t={t:.6g}"
                break
            if on_step is not None:
                on_step(t, y)
            if i % dec == 0 or i == n_steps:
                record(t, y)

    if status != DIVERGED:
        s_final = vec_barrier(y[system.ix], lims)
        W_tail = y[system.iwc] if system.W_fixed is None else system.W_fixed
        tail = abs(value(s_final, W_tail, sc.basis))
        if np.linalg.norm(s_final) < cfg.converge_tol and tail < cfg.converge_tol:
            status = CONVERGED

    cols = list(zip(*rows))
    arr = lambda k, w: np.array(cols[k], dtype=float).reshape(len(rows), w)  # noqa: E731
    log = SimLog(
        scenario=sc.name, n=n, m=m, L=L, gains=system.gains.as_dict(),
        t=np.array(cols[0]), x=arr(1, 2 * n), xhat=arr(2, 2 * n), s=arr(3, 2 * n),
        shat=arr(4, 2 * n), u=arr(5, m), Wc=arr(6, L), Wa=arr(7, L),
        gamma_min=np.array(cols[8]), gamma_max=np.array(cols[9]), pe=np.array(cols[10]),
        cost=np.array(cols[11]), vse=np.array(cols[12]), eta=arr(13, n),
        status=status, reason=reason, detail=detail, final_t=t, final_cost=float(y[system.ij]),
        final_Wc=y[system.iwc].copy(), final_Wa=y[system.iwa].copy(),
        final_Gamma=y[ig].reshape(L, L).copy(), final_state=y.copy(),
    )
    log.runtime = time.perf_counter() - start
    return log


def run_closed_loop(scenario: Scenario, cfg: Optional[SimConfig] = None, gains: Optional[Gains] = None,
                    cache: Optional[GridCache] = None, **init) -> SimLog:
    """Simultaneous estimation, learning and control from the scenario's initial conditions."""
    cfg = cfg or SimConfig.for_scenario(scenario)
    system = ClosedLoop(scenario, gains=gains, learn=True, cache=cache)
    return simulate(system, cfg, system.initial_state(**init))


def evaluation_rollout(scenario: Scenario, W_fixed, cfg: Optional[SimConfig] = None,
                       gains: Optional[Gains] = None, x0=None, xhat0=None, cache=None) -> SimLog:
    """Frozen-weight rollout: ``u = u_hat(shat, W_fixed)`` with learning disabled.

    The estimator keeps running.  Unless ``xhat0`` is given it starts at ``x0``
    (``cfg.eval_estimator_init == "matched"``) or at the scenario's estimate.
    """
    cfg = cfg or SimConfig.for_scenario(scenario)
    W_fixed = np.asarray(W_fixed, dtype=float)
    if W_fixed.ndim != 1 or not np.all(np.isfinite(W_fixed)):
        raise ValueError("fixed weights must be a finite vector")
    x0 = scenario.x0 if x0 is None else np.asarray(x0, dtype=float)
    if xhat0 is None:
        xhat0 = x0 if cfg.eval_estimator_init == "matched" else scenario.xhat0
    if cache is None:
        cache = GridCache.build(scenario.grid_points(), scenario.plant, scenario.basis, scenario.Q, scenario.R)
    system = ClosedLoop(scenario, gains=gains, learn=False, W_fixed=W_fixed, cache=cache)
    return simulate(system, cfg, system.initial_state(x0=x0, xhat0=xhat0))


def vse_trace(log: SimLog, scenario: Scenario, gains: Optional[Gains] = None) -> np.ndarray:
    """Estimator Lyapunov diagnostic recomputed from a log (uses ground-truth states)."""
    gains = gains or Gains(**log.gains)
    n = log.n
    lims1 = scenario.plant.limits[:n]
    return np.array([
        _vse(log.x[i], log.xhat[i], log.s[i], log.shat[i], log.eta[i], n, lims1, gains.alpha)
        for i in range(log.t.size)
    ])


def vse_value(s_err, r, eta, alpha: float) -> float:
    s_err, r, eta = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (s_err, r, eta))
    return float(0.5 * alpha * alpha * s_err @ s_err + 0.5 * r @ r + 0.5 * eta @ eta)


# -- equivalence checks ---------------------------------------------------------

def lemma1_check(plant: PlantModel, zeta: Callable, x0, cfg: SimConfig, return_trace: bool = False):
    """Integrate the original system under ``xi(x, t) = zeta(b(x), t)`` and the
    transformed system under ``zeta`` from ``b(x0)``; return the largest
    ``|x(t) - b^-1(s(t))|_inf`` over the horizon."""
    lims = plant.limits
    n = plant.n
    x = np.array(x0, dtype=float)
    s = vec_barrier(x, lims)
    dt = cfg.dt
    t = 0.0

    def orig(tt):
        def f(xx):
            return plant.flow(xx, np.atleast_1d(zeta(vec_barrier(xx, lims), tt)))
        return f

    def trans(tt):
        def f(ss):
            H, F, G = transformed_dynamics(ss, plant)
            return np.concatenate([H, F + G @ np.atleast_1d(zeta(ss, tt))])
        return f

    def step(fn_at, y, t):
        # time-dependent RK4: stages evaluated at t, t+dt/2, t+dt/2, t+dt
        try:
            k1 = fn_at(t)(y)
            k2 = fn_at(t + 0.5 * dt)(y + 0.5 * dt * k1)
            k3 = fn_at(t + 0.5 * dt)(y + 0.5 * dt * k2)
            k4 = fn_at(t + dt)(y + dt * k3)
        except BarrierDomainError as exc:
            raise StepRejected("BarrierExit", str(exc)) from exc
        out = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(out)):
            raise StepRejected("NonFinite")
        return out

    dev = [float(np.max(np.abs(x - vec_barrier_inverse(s, lims))))]
    for i in range(cfg.n_steps):
        x = step(orig, x, t)
        s = step(trans, s, t)
        t = (i + 1) * dt
        dev.append(float(np.max(np.abs(x - vec_barrier_inverse(s, lims)))))
    dev = np.array(dev)
    del n
    return (float(dev.max()), dev) if return_trace else float(dev.max())


def shadow_run(scenario: Scenario, cfg: SimConfig, learn: bool = True, W_fixed=None,
               x0=None, xhat0=None, gains: Optional[Gains] = None):
    """Closed-loop run carrying the equivalence oracles alongside.

    Returns ``(log, lemma2_dev, filter_dev)`` where ``lemma2_dev`` is the
    largest ``|xhat - b^-1(shat_t)|_inf`` between the original-coordinate
    estimator and the one integrated in barrier coordinates, and
    ``filter_dev`` the largest ``|eta_alg - eta_f|_inf`` between the
    derivative-free filter and the filter driven by the true error rate.
    """
    system = ClosedLoop(scenario, gains=gains, learn=learn, W_fixed=W_fixed, shadow=True)
    if not learn and system.cache is None:
        system.cache = GridCache.build(scenario.grid_points(), scenario.plant, scenario.basis,
                                       scenario.Q, scenario.R)
    y0 = system.initial_state(x0=x0, xhat0=xhat0)
    n = system.n
    lims = system.lims
    devs = {"lemma2": 0.0, "filter": 0.0}

    def track(t, y):
        xhat = y[system.ixh]
        devs["lemma2"] = max(devs["lemma2"], float(np.max(np.abs(xhat - vec_barrier_inverse(y[system.ish], lims)))))
        s_err = vec_barrier(y[system.ix][:n], system.lims1) - vec_barrier(xhat[:n], system.lims1)
        eta_alg = eta_from(y[system.ieb], s_err, system.snapshot, system.gains)
        devs["filter"] = max(devs["filter"], float(np.max(np.abs(eta_alg - y[system.ief]))))

    track(0.0, y0)
    log = simulate(system, cfg, y0, on_step=track)
    return log, devs["lemma2"], devs["filter"]


def lemma2_check(scenario: Scenario, cfg: SimConfig, **kw) -> float:
    log, dev, _ = shadow_run(scenario, cfg, **kw)
    if log.diverged:
        raise StepRejected(log.reason, log.detail)
    return dev


def filter_equivalence_check(scenario: Scenario, cfg: SimConfig, **kw) -> float:
    log, _, dev = shadow_run(scenario, cfg, **kw)
    if log.diverged:
        raise StepRejected(log.reason, log.detail)
    return dev


def with_dt(cfg: SimConfig, dt: float) -> SimConfig:
    return replace(cfg, dt=dt)
