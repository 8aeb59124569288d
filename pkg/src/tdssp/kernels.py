"""Backend selection for the hot kernels.

The compiled extension :mod:`tdssp._kernels` is used when it imports; set the
environment variable ``TDSSP_PURE_PYTHON=1`` to force the numpy fallback.
:data:`BACKEND` reports the choice (``"cython"`` or ``"python"``).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

__all__ = ["BACKEND", "upwind", "centered", "squared_upwind", "total_variation", "advect_tdrk",
           "python_backend", "compiled_backend"]


def python_backend():
    return _kernels_py


def compiled_backend():
    """The compiled module, or ``None`` if it is not built."""
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels


_impl = None
if os.environ.get("TDSSP_PURE_PYTHON", "").strip().lower() not in ("1", "true", "yes"):
    _impl = compiled_backend()
BACKEND = "python" if _impl is None else "cython"
if _impl is None:
    _impl = _kernels_py


def _c(u):
    return np.ascontiguousarray(u, dtype=np.float64)


def upwind(u, scale: float = 1.0):
    """``scale * (u[j+1] - u[j])`` on a periodic grid."""
    return _impl.upwind(_c(u), float(scale))


def centered(u, scale: float = 1.0):
    """``scale * (u[j+1] - 2 u[j] + u[j-1])`` on a periodic grid."""
    return _impl.centered(_c(u), float(scale))


def squared_upwind(u, scale: float = 1.0):
    """``scale * (u[j+2] - 2 u[j+1] + u[j])`` on a periodic grid."""
    return _impl.squared_upwind(_c(u), float(scale))


def total_variation(u) -> float:
    """Periodic total variation ``sum_j |u[j+1] - u[j]|``."""
    return float(_impl.total_variation(_c(u)))


def advect_tdrk(u0, A, Adot, b, bdot, lam: float, squared: bool, n_steps: int):
    """Fused explicit two-derivative RK run on periodic advection; returns ``(u, tv)``."""
    return _impl.advect_tdrk(_c(u0), np.ascontiguousarray(A, dtype=np.float64),
                             np.ascontiguousarray(Adot, dtype=np.float64), _c(b), _c(bdot),
                             float(lam), int(bool(squared)), int(n_steps))
