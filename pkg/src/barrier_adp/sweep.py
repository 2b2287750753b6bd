"""One-at-a-time gain sensitivity sweeps.

A cell runs the learning phase with one gain changed.  If it diverges the
cell is ``DS``; otherwise the frozen final critic weights are rolled out and
the rollout cost is reported.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .config import RunConfig
from .plants import GAIN_ALIASES, GAIN_NAMES
from .sim import DIVERGED, evaluation_rollout, run_closed_loop

# rows of the published sensitivity tables, by scenario
TABLE_VALUES = {
    "two_state": {
        "kc": (1, 1.5, 5, 50, 60),
        "ka1": (40, 50, 100, 1500, 2000),
        "ka2": (0.0001, 0.001, 0.1, 10, 15),
        "beta": (0.001, 0.1, 1, 20, 50),
        "gamma": (0.1, 0.5, 1, 3, 5),
        "k": (5, 7, 10, 200, 250),
        "alpha": (0.0001, 0.001, 1, 10, 15),
        "beta1": (0.001, 1, 5, 200, 400),
    },
    "manipulator": {
        "kc": (1, 100, 1000, 2000, 5000),
        "ka1": (10, 50, 100, 250, 500),
        "ka2": (0.01, 0.1, 0.5, 1, 2),
        "beta": (0.00001, 0.0001, 0.001, 0.01, 0.1),
        "gamma": (200, 300, 500, 600, 1000),
        "k": (0.01, 1, 50, 100, 500),
        "alpha": (0.01, 0.1, 1, 20, 100),
        "beta1": (1, 5, 10, 20, 100),
    },
}


@dataclass(frozen=True)
class SweepSpec:
    gain: str
    values: tuple

    def __post_init__(self):
        gain = GAIN_ALIASES.get(self.gain, self.gain)
        if gain not in GAIN_NAMES:
            raise ValueError(f"unknown gain {self.gain!r}; choose from {', '.join(GAIN_NAMES)}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sweep needs at least one value")
        for v in values:
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"sweep values must be positive, got {v!r}")
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class CellResult:
    gain: str
    value: float
    status: str
    J_learn: float
    J_eval: float
    reason: str = ""

    @property
    def diverged(self) -> bool:
        return self.status == DIVERGED

    def cell(self, digits: int = 3) -> str:
        return "DS" if self.diverged else f"{self.J_eval:.{digits}f}"


def run_cell(rc: RunConfig, gain: str, value: float) -> CellResult:
    scenario = rc.scenario.with_gain(gain, value)
    nan = float("nan")
    log = run_closed_loop(scenario, rc.sim)
    if log.diverged:
        return CellResult(gain, value, DIVERGED, nan, nan, f"learning {log.reason}")
    ev = evaluation_rollout(scenario, log.final_Wc, rc.sim)
    if ev.diverged:
        return CellResult(gain, value, DIVERGED, log.final_cost, nan, f"evaluation {ev.reason}")
    return CellResult(gain, value, ev.status, log.final_cost, ev.final_cost)


def _cell_job(args):
    return run_cell(*args)


def run_sweep(rc: RunConfig, specs: Sequence[SweepSpec], jobs: int = 1) -> list[CellResult]:
    """Run every cell; results come back in spec order regardless of ``jobs``."""
    tasks = [(rc, spec.gain, v) for spec in specs for v in spec.values]
    if jobs <= 1 or len(tasks) <= 1:
        return [run_cell(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_cell_job, tasks))


def default_specs(scenario_name: str, gains: Optional[Sequence[str]] = None) -> list[SweepSpec]:
    table = TABLE_VALUES.get(scenario_name)
    if table is None:
        raise ValueError(f"no default sweep values for scenario {scenario_name!r}")
    names = GAIN_NAMES if gains is None else [GAIN_ALIASES.get(g, g) for g in gains]
    for g in names:
        if g not in GAIN_NAMES:
            raise ValueError(f"unknown gain {g!r}; choose from {', '.join(GAIN_NAMES)}")
    return [SweepSpec(g, table[g]) for g in names]


def to_csv(results: Sequence[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gain", "value", "status", "J_learn", "J_eval", "cell", "reason"])
    for r in results:
        w.writerow([r.gain, repr(r.value), r.status, repr(r.J_learn), repr(r.J_eval), r.cell(), r.reason])
    return buf.getvalue()


def format_table(results: Sequence[CellResult]) -> str:
    """Two lines per gain (values, then costs or DS), like the published tables."""
    lines = []
    order = []
    for r in results:
        if r.gain not in order:
            order.append(r.gain)
    for gain in order:
        rows = [r for r in results if r.gain == gain]
        width = max(10, *(len(f"{r.value:g}") + 2 for r in rows))
        lines.append(f"{gain + ' =':<8}" + "".join(f"{r.value:>{width}g}" for r in rows))
        lines.append(f"{'cost':<8}" + "".join(f"{r.cell():>{width}}" for r in rows))
    return "\n".join(lines)
