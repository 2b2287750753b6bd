"""TOML run configuration: a built-in scenario plus per-key overrides.

A config names a scenario and may override any of its constants::

    scenario = "two_state"

    [gains]
    kc = 5.0

    [sim]
    dt = 1e-3
    T = 10.0

Sections are ``plant``, ``gains``, ``learner``, ``sim`` and ``grid``.  Every
validation failure is reported as :class:`ConfigError` carrying the dotted key
path (``sim.dt``).
"""

from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .plants import GAIN_ALIASES, GAIN_NAMES, PLANTS, SCENARIOS, Gains, GridSpec, Scenario, load_scenario
from .sim import SimConfig

SECTIONS = ("plant", "gains", "learner", "sim", "grid")
PLANT_KEYS = {
    "two_state": ("lower", "upper"),
    "linear_toy": ("lower", "upper"),
    "manipulator": ("lower", "upper", "p1", "p2", "p3", "fd", "fs"),
}
LEARNER_KEYS = ("Q", "R", "Wa0", "Wc0", "Gamma0")
SIM_KEYS = ("dt", "T", "decimation", "weight_cap", "barrier_margin", "converge_tol",
            "eval_estimator_init", "x0", "xhat0")
GRID_KEYS = ("half_width", "per_axis", "layout")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    sim: SimConfig
    raw: dict

    def to_toml(self) -> str:
        return tomli_w.dumps(scenario_to_dict(self.scenario, self.sim))


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``section.key=value``; the value is read as a TOML value when possible."""
    if "=" not in text:
        raise ConfigError(text, "override must look like section.key=value")
    key, _, value = text.partition("=")
    key = key.strip()
    value = value.strip()
    try:
        parsed = tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value
    return key, parsed


def apply_overrides(raw: dict, overrides: Iterable[str]) -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for item in overrides:
        key, value = parse_override(item)
        parts = key.split(".")
        if len(parts) == 1:
            if parts[0] != "scenario":
                raise ConfigError(key, "unknown top-level key")
            out["scenario"] = value
            continue
        if len(parts) != 2:
            raise ConfigError(key, "expected section.key")
        section, name = parts
        if section not in SECTIONS:
            raise ConfigError(key, f"unknown section (choose from {', '.join(SECTIONS)})")
        out.setdefault(section, {})[name] = value
    return out


def read_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        if str(path) in SCENARIOS:
            return {"scenario": str(path)}
        raise ConfigError("config", f"file not found: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None


def load_config(path=None, overrides: Iterable[str] = (), scenario: Optional[str] = None) -> RunConfig:
    raw = read_config(path) if path is not None else {}
    if scenario is not None:
        raw = {**raw, "scenario": scenario}
    raw = apply_overrides(raw, overrides)
    return build_config(raw)


def _number(key: str, value, positive: bool = True, integer: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer and (not float(value).is_integer()):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    if positive and value <= 0.0:
        raise ConfigError(key, f"must be positive, got {value!r}")
    return int(value) if integer else value


def _array(key: str, value, shape: tuple) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected numeric array, got {value!r}") from None
    if len(shape) == 2 and arr.ndim == 0:
        arr = float(arr) * np.eye(shape[0])
    if arr.shape != shape:
        raise ConfigError(key, f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(key, "entries must be finite")
    return arr


def _check_keys(section: str, table, allowed) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(section, "must be a table")
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}", "unknown key")
    return table


def _spd(key: str, M: np.ndarray):
    if not np.allclose(M, M.T) or np.linalg.eigvalsh(0.5 * (M + M.T)).min() <= 0.0:
        raise ConfigError(key, "must be symmetric positive definite")


def build_config(raw: dict) -> RunConfig:
    for key in raw:
        if key != "scenario" and key not in SECTIONS:
            raise ConfigError(key, "unknown top-level key")
    name = raw.get("scenario", "two_state")
    if name not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    base = load_scenario(name)
    n2, m, L = 2 * base.plant.n, base.plant.m, base.basis.size

    plant_tbl = _check_keys("plant", raw.get("plant", {}), PLANT_KEYS[name])
    plant = base.plant
    if plant_tbl:
        lower = _array("plant.lower", plant_tbl.get("lower", plant.limits.lower), (n2,))
        upper = _array("plant.upper", plant_tbl.get("upper", plant.limits.upper), (n2,))
        for j in range(n2):
            if not lower[j] < 0.0 < upper[j]:
                raise ConfigError("plant.lower" if lower[j] >= 0.0 else "plant.upper",
                                  f"component {j} must satisfy lower < 0 < upper")
        params = {}
        for key in ("p1", "p2", "p3"):
            if key in plant_tbl:
                params[key] = _number(f"plant.{key}", plant_tbl[key])
        for key in ("fd", "fs"):
            if key in plant_tbl:
                arr = _array(f"plant.{key}", plant_tbl[key], (2,))
                if np.any(arr < 0.0):
                    raise ConfigError(f"plant.{key}", "friction coefficients must be nonnegative")
                params[key] = tuple(arr)
        plant = PLANTS[name](tuple(lower), tuple(upper), **params)

    gains_tbl = _check_keys("gains", raw.get("gains", {}), GAIN_NAMES + tuple(GAIN_ALIASES))
    gains = base.gains.as_dict()
    for key, value in gains_tbl.items():
        gains[GAIN_ALIASES.get(key, key)] = _number(f"gains.{key}", value)
    gains = Gains(**gains)
    if gains.beta1 <= gains.alpha:
        warnings.warn("gains.beta1 <= gains.alpha: the estimator gain condition is not met", stacklevel=2)

    learner_tbl = _check_keys("learner", raw.get("learner", {}), LEARNER_KEYS)
    shapes = {"Q": (n2, n2), "R": (m, m), "Wa0": (L,), "Wc0": (L,), "Gamma0": (L, L)}
    learner = {k: _array(f"learner.{k}", learner_tbl.get(k, getattr(base, k)), shapes[k]) for k in shapes}
    for key in ("Q", "R", "Gamma0"):
        _spd(f"learner.{key}", learner[key])

    grid_tbl = _check_keys("grid", raw.get("grid", {}), GRID_KEYS)
    half = _number("grid.half_width", grid_tbl.get("half_width", base.grid.half_width))
    per_axis = _number("grid.per_axis", grid_tbl.get("per_axis", base.grid.per_axis), integer=True)
    layout = grid_tbl.get("layout", base.grid.layout)
    if layout not in ("centered", "endpoints"):
        raise ConfigError("grid.layout", "must be 'centered' or 'endpoints'")
    grid = GridSpec(half, per_axis, layout)

    sim_tbl = _check_keys("sim", raw.get("sim", {}), SIM_KEYS)
    x0 = _array("sim.x0", sim_tbl.get("x0", base.x0), (n2,))
    xhat0 = _array("sim.xhat0", sim_tbl.get("xhat0", base.xhat0), (n2,))
    for key, vec in (("sim.x0", x0), ("sim.xhat0", xhat0)):
        if not plant.limits.contains(vec):
            raise ConfigError(key, "must lie strictly inside the plant limits")
    defaults = SimConfig(dt=base.dt, T=base.T)
    sim_args = {}
    for f in fields(SimConfig):
        if f.name not in sim_tbl:
            sim_args[f.name] = getattr(defaults, f.name)
        elif f.name == "eval_estimator_init":
            value = sim_tbl[f.name]
            if value not in ("matched", "scenario"):
                raise ConfigError("sim.eval_estimator_init", "must be 'matched' or 'scenario'")
            sim_args[f.name] = value
        else:
            sim_args[f.name] = _number(f"sim.{f.name}", sim_tbl[f.name], integer=f.name == "decimation")
    if sim_args["dt"] > sim_args["T"]:
        raise ConfigError("sim.dt", "must not exceed sim.T")
    sim = SimConfig(**sim_args)

    scenario = replace(base, plant=plant, gains=gains, grid=grid, x0=x0, xhat0=xhat0,
                       dt=sim.dt, T=sim.T, **learner)
    return RunConfig(scenario, sim, raw)


def scenario_to_dict(scenario: Scenario, sim: Optional[SimConfig] = None) -> dict:
    """Every constant of a scenario as a config table (round-trips through :func:`build_config`)."""
    sim = sim or SimConfig.for_scenario(scenario)
    lims = scenario.plant.limits
    plant = {"lower": lims.lower.tolist(), "upper": lims.upper.tolist()}
    for key, value in scenario.plant.params.items():
        plant[key] = [float(v) for v in value] if isinstance(value, tuple) else value
    sim_tbl = {f.name: getattr(sim, f.name) for f in fields(SimConfig)}
    sim_tbl["x0"] = scenario.x0.tolist()
    sim_tbl["xhat0"] = scenario.xhat0.tolist()
    return {
        "scenario": scenario.name,
        "plant": plant,
        "gains": {k: float(v) for k, v in scenario.gains.as_dict().items()},
        "learner": {k: getattr(scenario, k).tolist() for k in LEARNER_KEYS},
        "sim": sim_tbl,
        "grid": {"half_width": scenario.grid.half_width, "per_axis": scenario.grid.per_axis,
                 "layout": scenario.grid.layout},
    }
