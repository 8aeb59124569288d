"""Pure-numpy reference implementation of the hot kernels.

All stencils act on periodic grid functions.  ``scale`` multiplies the
stencil, so ``upwind(u, 1/dx)`` is the upwind derivative and
``upwind(u, lam)`` is ``dt F`` in Courant-number units.
"""

from __future__ import annotations

import numpy as np


def upwind(u: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """``scale * (u[j+1] - u[j])``."""
    return scale * (np.roll(u, -1) - u)


def centered(u: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """``scale * (u[j+1] - 2 u[j] + u[j-1])``."""
    return scale * (np.roll(u, -1) - 2.0 * u + np.roll(u, 1))


def squared_upwind(u: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """``scale * (u[j+2] - 2 u[j+1] + u[j])``: the upwind difference applied twice."""
    return scale * (np.roll(u, -2) - 2.0 * np.roll(u, -1) + u)


def total_variation(u: np.ndarray) -> float:
    """``sum_j |u[j+1] - u[j]|`` with periodic wrap."""
    return float(np.abs(np.roll(u, -1) - u).sum())


def advect_tdrk(u0, A, Adot, b, bdot, lam: float, squared: int, n_steps: int):
    """Fused explicit two-derivative RK run on periodic advection (see the compiled twin)."""
    u = np.array(u0, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    Adot = np.asarray(Adot, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    bdot = np.asarray(bdot, dtype=np.float64)
    s, m = len(b), len(u)
    second = squared_upwind if squared else centered
    F = np.empty((s, m))
    G = np.empty((s, m))
    tv = np.full(n_steps + 1, np.nan)
    tv[0] = total_variation(u)
    lam2 = lam * lam
    for n in range(n_steps):
        for i in range(s):
            y = u.copy()
            for j in range(i):
                y = y + A[i, j] * F[j] + Adot[i, j] * G[j]
            F[i] = upwind(y, lam)
            G[i] = second(y, lam2)
        new = u.copy()
        for j in range(s):
            new = new + b[j] * F[j] + bdot[j] * G[j]
        u = new
        if not np.all(np.isfinite(u)):
            break
        tv[n + 1] = total_variation(u)
    return u, tv
