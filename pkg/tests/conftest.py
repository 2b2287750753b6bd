import numpy as np
import pytest

from barrier_adp.barrier import BarrierLimits
from barrier_adp.plants import load_scenario
from barrier_adp.sim import SimConfig, evaluation_rollout, run_closed_loop


@pytest.fixture(scope="session")
def two_state():
    return load_scenario("two_state")


@pytest.fixture(scope="session")
def manipulator():
    return load_scenario("manipulator")


@pytest.fixture(scope="session")
def unit_limits():
    return BarrierLimits([-1.0], [1.0])


@pytest.fixture(scope="session")
def two_state_run(two_state):
    """Nominal learning run, shared by every test that needs it."""
    return run_closed_loop(two_state, SimConfig.for_scenario(two_state))


@pytest.fixture(scope="session")
def two_state_eval(two_state, two_state_run):
    return evaluation_rollout(two_state, two_state_run.final_Wc, SimConfig.for_scenario(two_state))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def manipulator_run(manipulator):
    return run_closed_loop(manipulator, SimConfig.for_scenario(manipulator))


@pytest.fixture(scope="session")
def manipulator_eval(manipulator, manipulator_run):
    return evaluation_rollout(manipulator, manipulator_run.final_Wc, SimConfig.for_scenario(manipulator))


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture
def acceptance(request):
    """Record the one-line verdict of an acceptance criterion."""

    def record(number: int, passed: bool, text: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {text}"
        request.config._acceptance_lines[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
