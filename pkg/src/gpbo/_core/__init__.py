"""Numerical core: covariance-matrix and gradient assembly.

Two interchangeable backends live here:

``_fast``
    Cython extension compiled at install time.
``_ref``
    Pure NumPy implementation with identical semantics.

The compiled backend is preferred when available. Set the environment
variable ``GPBO_PURE_PYTHON=1`` to force the NumPy fallback (used by the
backend-parity tests and the ``benchmarks/bench_core.py`` script).
"""

import os

from . import _ref

if os.environ.get("GPBO_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

lml_grad_contract = _impl.lml_grad_contract
se_matrix = _impl.se_matrix
se_cross = _impl.se_cross
se_matrix_with_gradients = _impl.se_matrix_with_gradients
matern52_matrix = _impl.matern52_matrix
matern52_cross = _impl.matern52_cross
matern52_matrix_with_gradients = _impl.matern52_matrix_with_gradients

__all__ = [
    "BACKEND",
    "lml_grad_contract",
    "se_matrix",
    "se_cross",
    "se_matrix_with_gradients",
    "matern52_matrix",
    "matern52_cross",
    "matern52_matrix_with_gradients",
]
