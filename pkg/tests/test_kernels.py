import os
import subprocess
import sys

import pytest

from barrier_adp import kernels

SNIPPET = """
from barrier_adp import BACKEND
from barrier_adp.plants import load_scenario
from barrier_adp.sim import SimConfig, run_closed_loop
log = run_closed_loop(load_scenario("two_state"), SimConfig(dt=1e-3, T=1.0))
print(BACKEND, repr(float(log.final_cost)), *(repr(float(w)) for w in log.final_Wc))
"""


def _run(pure: bool):
    env = dict(os.environ)
    env.pop("BARRIER_ADP_PURE", None)
    if pure:
        env["BARRIER_ADP_PURE"] = "1"
    out = subprocess.run([sys.executable, "-c", SNIPPET], capture_output=True, text=True, env=env, check=True)
    name, *values = out.stdout.split()
    return name, [float(v) for v in values]


def test_compiled_backend_selected():
    assert kernels.BACKEND == "cython"
    assert kernels.learner_rates is kernels.get_backend("cython").learner_rates


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_closed_loop_agrees_across_backends():
    name_c, compiled = _run(pure=False)
    name_p, pure = _run(pure=True)
    assert (name_c, name_p) == ("cython", "python")
    for a, b in zip(compiled, pure):
        assert a == pytest.approx(b, rel=1e-10, abs=1e-12)
