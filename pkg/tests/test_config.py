import warnings

import numpy as np
import pytest

from barrier_adp.config import ConfigError, build_config, load_config, parse_override
from barrier_adp.plants import load_scenario


def test_builtin_by_name():
    rc = load_config("two_state")
    assert rc.scenario.name == "two_state"
    assert rc.sim.dt == 1e-3 and rc.sim.T == 10.0
    assert rc.scenario.gains == load_scenario("two_state").gains


def test_overrides_apply():
    rc = load_config("two_state", ["gains.kc=7", "sim.T=2.5", "gains.v=2", "grid.layout='endpoints'"])
    assert rc.scenario.gains.kc == 7.0
    assert rc.scenario.gains.gamma == 2.0
    assert rc.sim.T == 2.5
    assert rc.scenario.grid.layout == "endpoints"


def test_parse_override_values():
    assert parse_override("sim.dt=5e-4") == ("sim.dt", 5e-4)
    assert parse_override("grid.layout=centered") == ("grid.layout", "centered")
    assert parse_override("sim.x0=[1.0, 2.0]") == ("sim.x0", [1.0, 2.0])


@pytest.mark.parametrize("override, key", [
    ("sim.dt=-1e-3", "sim.dt"),
    ("sim.dt=0", "sim.dt"),
    ("sim.T=nan", "sim.T"),
    ("sim.dt=20", "sim.dt"),
    ("sim.decimation=2.5", "sim.decimation"),
    ("gains.kc=-5", "gains.kc"),
    ("gains.kc='x'", "gains.kc"),
    ("gains.zeta=1", "gains.zeta"),
    ("learner.Q=[[1.0, 0.0], [0.0, -1.0]]", "learner.Q"),
    ("learner.Wc0=[1.0, 2.0]", "learner.Wc0"),
    ("grid.layout='random'", "grid.layout"),
    ("grid.per_axis=0", "grid.per_axis"),
    ("sim.x0=[7.0, 0.0]", "sim.x0"),
    ("plant.lower=[1.0, -7.0]", "plant.lower"),
    ("plant.p1=1.0", "plant.p1"),
    ("solver.tol=1", "solver.tol"),
    ("sim.eval_estimator_init='guess'", "sim.eval_estimator_init"),
])
def test_errors_carry_key_path(override, key):
    with pytest.raises(ConfigError) as exc:
        load_config("two_state", [override])
    assert exc.value.key == key
    assert str(exc.value).startswith(key)


def test_unknown_scenario_and_missing_file(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(tmp_path / "nope.toml")
    assert exc.value.key == "config"
    with pytest.raises(ConfigError) as exc:
        build_config({"scenario": "pendulum"})
    assert exc.value.key == "scenario"


def test_beta1_alpha_warning():
    with pytest.warns(UserWarning, match="beta1"):
        load_config("two_state", ["gains.alpha=10"])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_config("two_state")


@pytest.mark.parametrize("name", ["two_state", "manipulator", "linear_toy"])
def test_toml_round_trip(tmp_path, name):
    rc = load_config(name, ["gains.kc=3", "sim.T=1.5"])
    path = tmp_path / "cfg.toml"
    path.write_text(rc.to_toml())
    back = load_config(path)
    assert back.to_toml() == rc.to_toml()
    assert back.scenario.gains == rc.scenario.gains
    assert back.sim == rc.sim
    assert np.array_equal(back.scenario.Gamma0, rc.scenario.Gamma0)
    assert back.scenario.plant.params == rc.scenario.plant.params


def test_manipulator_plant_parameters():
    rc = load_config("manipulator", ["plant.p1=4.0", "plant.fd=[5.0, 1.0]"])
    assert rc.scenario.plant.params["p1"] == 4.0
    assert rc.scenario.plant.params["fd"] == (5.0, 1.0)
    with pytest.raises(ConfigError) as exc:
        load_config("manipulator", ["plant.fs=[-1.0, 0.0]"])
    assert exc.value.key == "plant.fs"


@pytest.mark.parametrize("name", ["two_state", "manipulator"])
def test_shipped_configs_match_builtins(name):
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / f"{name}.toml"
    assert load_config(path).to_toml() == load_config(name).to_toml()
