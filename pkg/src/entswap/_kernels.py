"""Kernel dispatch.

Numba kernels are used when numba imports cleanly, unless the environment
variable ``ENTSWAP_DISABLE_NUMBA`` is set to a truthy value, in which case the
pure-numpy path is used. The choice is made once, at import time.
"""
import os

from . import _kernels_numpy

_disabled = os.environ.get("ENTSWAP_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

if _disabled:
    _impl = _kernels_numpy
else:
    try:
        from . import _kernels_numba as _impl
    except ImportError:  # numba not installed
        _impl = _kernels_numpy

BACKEND = "numba" if _impl is not _kernels_numpy else "numpy"

apply_1q = _impl.apply_1q
apply_cnot = _impl.apply_cnot
prob_one = _impl.prob_one
collapse = _impl.collapse
measure_z = _impl.measure_z
norms = _impl.norms
