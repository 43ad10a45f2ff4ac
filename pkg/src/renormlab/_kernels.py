"""Backend selection for the numeric kernels.

The numba backend is used when available.  Set the environment variable
``RENORMLAB_NUMBA=0`` before import to force the pure NumPy fallback
(``benchmarks/bench_kernels.py`` times one against the other).
"""

from __future__ import annotations

import os

from . import _kernels_numpy as numpy_impl

_flag = os.environ.get("RENORMLAB_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "off", "no")

numba_impl = None
if _want_numba:
    try:
        from . import _kernels_numba as numba_impl  # noqa: F401
    except ImportError:
        numba_impl = None

impl = numba_impl if numba_impl is not None else numpy_impl
BACKEND = "numba" if numba_impl is not None else "numpy"

cheb_eval = impl.cheb_eval
cheb_eval_scalar = impl.cheb_eval_scalar
cheb2_eval = impl.cheb2_eval
cheb2_eval_scalar = impl.cheb2_eval_scalar
cheb_diff = impl.cheb_diff
cheb_diff_rel = impl.cheb_diff_rel
cheb2_diff_x = impl.cheb2_diff_x
cheb2_diff_y = impl.cheb2_diff_y
cheb2_diff_x_rel = impl.cheb2_diff_x_rel
cheb2_diff_y_rel = impl.cheb2_diff_y_rel
henon_orbit = impl.henon_orbit
logistic_critical_residual = impl.logistic_critical_residual
logistic_orbit = impl.logistic_orbit
