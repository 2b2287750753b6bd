"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the NumPy versions
take over.  Setting ``BARRIER_ADP_PURE=1`` forces the NumPy path.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("BARRIER_ADP_PURE") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

barrier_vec = _impl.barrier_vec
barrier_inverse_vec = _impl.barrier_inverse_vec
rate_factor_vec = _impl.rate_factor_vec
grid_regressors = _impl.grid_regressors
learner_rates = _impl.learner_rates


def get_backend(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"`` (for benchmarks/tests)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
