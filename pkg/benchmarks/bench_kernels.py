"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 200]

Times each kernel on the manipulator grid (625 points, 10 features) and the
two-state grid (100 points, 3 features), checks that both backends agree, and
prints per-call times and the speedup.
"""

import argparse
import timeit

import numpy as np

from barrier_adp.kernels import get_backend
from barrier_adp.learner import GridCache
from barrier_adp.plants import load_scenario


def _cases(scenario_name):
    sc = load_scenario(scenario_name)
    cache = GridCache.build(sc.grid_points(), sc.plant, sc.basis, sc.Q, sc.R)
    g = sc.gains
    lo, hi = sc.plant.limits.lower, sc.plant.limits.upper
    y = 0.5 * (lo + hi) * 0.1
    s = np.linspace(-3.0, 3.0, lo.size)
    learner_args = (cache.omega0, cache.C, cache.q, cache.R, cache.Rinv,
                    np.ascontiguousarray(sc.Wc0), np.ascontiguousarray(sc.Gamma0),
                    np.ascontiguousarray(sc.Wa0), g.kc, g.ka1, g.ka2, g.beta, g.gamma)
    return {
        "barrier_vec": lambda k: k.barrier_vec(y, lo, hi, 1e-12),
        "barrier_inverse_vec": lambda k: k.barrier_inverse_vec(s, lo, hi),
        "rate_factor_vec": lambda k: k.rate_factor_vec(s, lo, hi),
        "grid_regressors": lambda k: k.grid_regressors(cache.omega0, cache.C, cache.Rinv,
                                                       np.ascontiguousarray(sc.Wa0)),
        "learner_rates": lambda k: k.learner_rates(*learner_args),
    }


def _flatten(result):
    if isinstance(result, tuple):
        return np.concatenate([np.ravel(np.asarray(r, dtype=float)) for r in result if r is not None])
    return np.ravel(np.asarray(result, dtype=float))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=200)
    args = p.parse_args(argv)
    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled extension not built; only the NumPy fallback is available")
        return 1
    print(f"{'scenario':<12}{'kernel':<22}{'python us':>12}{'cython us':>12}{'speedup':>10}{'max diff':>12}")
    for name in ("two_state", "manipulator"):
        for kname, fn in _cases(name).items():
            diff = float(np.max(np.abs(_flatten(fn(py)) - _flatten(fn(cy)))))
            t_py = min(timeit.repeat(lambda: fn(py), number=args.repeat, repeat=3)) / args.repeat
            t_cy = min(timeit.repeat(lambda: fn(cy), number=args.repeat, repeat=3)) / args.repeat
            print(f"{name:<12}{kname:<22}{t_py * 1e6:>12.2f}{t_cy * 1e6:>12.2f}"
                  f"{t_py / t_cy:>10.1f}{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
