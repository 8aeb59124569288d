"""Concrete semi-discrete systems used by the experiments and tests.

* :class:`AdvectionProblem` -- periodic upwind advection ``u_t = u_x`` on
  ``[0, 1]`` with a centered or squared-upwind second-derivative operator.
* :class:`RelaxationProblem` -- a two-velocity relaxation toy with a linear
  equilibrium projection ``G`` and closed-form implicit stage solves,
  optionally coupled to upwind transport.
* :class:`RiccatiProblem` and :class:`SplitRiccatiProblem` -- scalar
  nonlinear ODEs with exact solutions for convergence studies.

Every class implements the :class:`~tdssp.integrators.SemiDiscreteSystem`
interface.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import newton

from . import kernels
from .integrators import SemiDiscreteSystem
from .registry import K_DEFAULT, KAPPA_DEFAULT

__all__ = [
    "upwind_F",
    "centered_Fdot",
    "squared_upwind_Fdot",
    "total_variation",
    "step_ic",
    "smooth_ic",
    "cell_centers",
    "grid_csv",
    "AdvectionProblem",
    "RelaxationProblem",
    "RiccatiProblem",
    "SplitRiccatiProblem",
    "AVERAGING",
    "slope_projection",
]


# ---------------------------------------------------------------------------
# grid functions


def cell_centers(m: int) -> np.ndarray:
    """``x_j = (j + 1/2)/m`` for ``j = 0..m-1``."""
    return (np.arange(m) + 0.5) / m


def upwind_F(u: np.ndarray) -> np.ndarray:
    """``(u[j+1] - u[j]) / dx`` with periodic wrap and ``dx = 1/len(u)``."""
    u = np.asarray(u, dtype=float)
    return kernels.upwind(u, len(u))


def centered_Fdot(u: np.ndarray) -> np.ndarray:
    """``(u[j+1] - 2u[j] + u[j-1]) / dx^2`` with periodic wrap."""
    u = np.asarray(u, dtype=float)
    return kernels.centered(u, float(len(u)) ** 2)


def squared_upwind_Fdot(u: np.ndarray) -> np.ndarray:
    """``(u[j+2] - 2u[j+1] + u[j]) / dx^2``: :func:`upwind_F` applied twice."""
    u = np.asarray(u, dtype=float)
    return kernels.squared_upwind(u, float(len(u)) ** 2)


def total_variation(u: np.ndarray) -> float:
    """``sum_j |u[j+1] - u[j]|`` with periodic wrap."""
    return kernels.total_variation(np.asarray(u, dtype=float))


def step_ic(m: int) -> np.ndarray:
    """1 where the cell center lies in ``[1/4, 1/2]``, 0 elsewhere."""
    if m < 4:
        raise ValueError(f"step_ic needs m >= 4, got {m}")
    x = cell_centers(m)
    return ((x >= 0.25) & (x <= 0.5)).astype(float)


def smooth_ic(m: int) -> np.ndarray:
    """``sin(2 pi x)`` at cell centers."""
    return np.sin(2.0 * np.pi * cell_centers(m))


def grid_csv(u: np.ndarray, path=None) -> str:
    """Grid function as CSV with columns ``j, x_j, u_j``; written to ``path`` if given."""
    u = np.asarray(u, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "x_j", "u_j"])
    for j, (x, val) in enumerate(zip(cell_centers(len(u)), u)):
        w.writerow([j, repr(float(x)), repr(float(val))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# advection


@dataclass(frozen=True)
class AdvectionProblem(SemiDiscreteSystem):
    """Periodic upwind advection with ``m`` cells; explicit operator only.

    ``fdot_variant="centered"`` pairs with the SD condition at
    ``K = 1/sqrt(2)``; ``"squared-upwind"`` pairs with the TS condition at
    ``kappa = 1``.  The forward-Euler limit is ``dt_fe = dx``.
    """

    m: int = 1600
    fdot_variant: Literal["centered", "squared-upwind"] = "centered"

    def __post_init__(self) -> None:
        if self.m < 4:
            raise ValueError(f"AdvectionProblem needs m >= 4, got {self.m}")
        if self.fdot_variant not in ("centered", "squared-upwind"):
            raise ValueError(f"unknown fdot_variant {self.fdot_variant!r}")

    @property
    def dim(self) -> int:
        return self.m

    @property
    def dx(self) -> float:
        return 1.0 / self.m

    @property
    def dt_fe(self) -> float:
        return self.dx

    @property
    def condition_class(self) -> str:
        return "SD" if self.fdot_variant == "centered" else "TS"

    @property
    def param(self) -> float:
        return K_DEFAULT if self.fdot_variant == "centered" else KAPPA_DEFAULT

    def f_ex(self, u):
        return upwind_F(u)

    def fdot_ex(self, u):
        return centered_Fdot(u) if self.fdot_variant == "centered" else squared_upwind_Fdot(u)

    def functional(self, u) -> float:
        return total_variation(u)

    def initial(self) -> np.ndarray:
        return step_ic(self.m)


# ---------------------------------------------------------------------------
# relaxation toy

#: Projection onto the mean of the two components.
AVERAGING = np.array([[0.5, 0.5], [0.5, 0.5]])


def slope_projection(b: float) -> np.ndarray:
    """``(u, v) -> (u, b u)``; a projection for any ``b``."""
    if abs(b) > 1:
        raise ValueError(f"slope must satisfy |b| <= 1, got {b}")
    return np.array([[1.0, 0.0], [float(b), 0.0]])


@dataclass(frozen=True, eq=False)
class RelaxationProblem(SemiDiscreteSystem):
    """Two-component relaxation ``w_t = F_ex(w) + (G w - w)/eps``.

    The state stores ``m`` values of ``u`` followed by ``m`` values of ``v``;
    ``G`` is a 2x2 projection applied pointwise to ``(u_j, v_j)``.  The
    implicit second derivative is fixed to ``fdot_im = -f_im``, which makes
    every implicit stage a linear solve with the closed form
    ``G a + (I - G) a / (1 + mu)``, ``mu = (gamma - gammadot)/eps``.  This
    coincides with the chain-rule value ``f_im' f_im`` only when ``eps = 1``.

    With ``coupled=True`` the explicit part transports ``u`` with speed
    ``+1`` and ``v`` with speed ``-1`` by upwind differences (first-order
    Lax--Friedrichs flux splitting with unit wave speeds), and
    ``dt_fe = dx``.  Otherwise ``F_ex = 0``.  The monitored functional is
    ``TV(u) + TV(v)``, which forward Euler on either part does not increase
    when ``G`` is :data:`AVERAGING` and ``dt <= dt_fe`` (explicit) or
    ``dt <= eps`` (implicit part).
    """

    eps: float = 1.0
    m: int = 64
    coupled: bool = True
    G: np.ndarray = field(default_factory=lambda: AVERAGING.copy())

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        G = np.array(self.G, dtype=float)
        if G.shape != (2, 2):
            raise ValueError("G must be a 2x2 matrix")
        if np.abs(G @ G - G).max() > 1e-15:
            raise ValueError("G must be a projection (G @ G == G)")
        G.setflags(write=False)
        object.__setattr__(self, "G", G)

    @property
    def dim(self) -> int:
        return 2 * self.m

    @property
    def dx(self) -> float:
        return 1.0 / self.m

    @property
    def dt_fe(self) -> float:
        return self.dx if self.coupled else math.inf

    def _split(self, w):
        w = np.asarray(w, dtype=float)
        return w[: self.m], w[self.m:]

    def project(self, w) -> np.ndarray:
        u, v = self._split(w)
        G = self.G
        return np.concatenate([G[0, 0] * u + G[0, 1] * v, G[1, 0] * u + G[1, 1] * v])

    def f_ex(self, w):
        if not self.coupled:
            return np.zeros(self.dim)
        u, v = self._split(w)
        # u moves right (uses u[j-1]), v moves left (uses v[j+1])
        return np.concatenate([-kernels.upwind(np.roll(u, 1), self.m), kernels.upwind(v, self.m)])

    def fdot_ex(self, w):
        if not self.coupled:
            return np.zeros(self.dim)
        u, v = self._split(w)
        s = float(self.m) ** 2
        return np.concatenate([kernels.squared_upwind(np.roll(u, 2), s), kernels.squared_upwind(v, s)])

    def f_im(self, w):
        w = np.asarray(w, dtype=float)
        return (self.project(w) - w) / self.eps

    def fdot_im(self, w):
        return -self.f_im(w)

    def implicit_stage_solve(self, a, gamma: float, gammadot: float):
        a = np.asarray(a, dtype=float)
        mu = (gamma - gammadot) / self.eps
        Ga = self.project(a)
        return Ga + (a - Ga) / (1.0 + mu)

    def stage_residual_scale(self, u, gamma: float, gammadot: float) -> float:
        # G u - u cancels to rounding level near equilibrium, then is divided by eps
        return (abs(gamma) + abs(gammadot)) * float(np.abs(u).max()) / self.eps

    def functional(self, w) -> float:
        u, v = self._split(w)
        return total_variation(u) + total_variation(v)

    def linear_operators(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense matrices ``(L_ex, L_im)`` of the two linear parts."""
        eye = np.eye(self.dim)
        L_ex = np.column_stack([self.f_ex(col) for col in eye])
        L_im = np.column_stack([self.f_im(col) for col in eye])
        return L_ex, L_im

    def initial(self, kind: Literal["step", "smooth"] = "step") -> np.ndarray:
        if kind == "step":
            u = step_ic(self.m)
            v = 0.5 * np.roll(u, self.m // 4)
        elif kind == "smooth":
            x = cell_centers(self.m)
            u = np.sin(2 * np.pi * x)
            v = 0.5 * np.cos(2 * np.pi * x)
        else:
            raise ValueError(f"unknown initial condition {kind!r}")
        return np.concatenate([u, v])


# ---------------------------------------------------------------------------
# scalar ODEs


@dataclass(frozen=True)
class RiccatiProblem(SemiDiscreteSystem):
    """``u' = -u^2`` with ``Fdot = 2u^3`` and exact solution ``u0/(1 + u0 t)``.

    ``operator`` chooses whether ``F`` is exposed as the explicit part (for
    explicit methods) or as the implicit part (for implicit methods, with a
    Newton stage solve).
    """

    operator: Literal["explicit", "implicit"] = "explicit"
    u0: float = 1.0

    @property
    def dim(self) -> int:
        return 1

    def _F(self, u):
        return -np.asarray(u, dtype=float) ** 2

    def _Fdot(self, u):
        return 2.0 * np.asarray(u, dtype=float) ** 3

    def f_ex(self, u):
        return self._F(u) if self.operator == "explicit" else np.zeros_like(np.asarray(u, dtype=float))

    def fdot_ex(self, u):
        return self._Fdot(u) if self.operator == "explicit" else np.zeros_like(np.asarray(u, dtype=float))

    def f_im(self, u):
        return self._F(u) if self.operator == "implicit" else np.zeros_like(np.asarray(u, dtype=float))

    def fdot_im(self, u):
        return self._Fdot(u) if self.operator == "implicit" else np.zeros_like(np.asarray(u, dtype=float))

    def implicit_stage_solve(self, a, gamma: float, gammadot: float):
        a = np.asarray(a, dtype=float)
        if self.operator != "implicit" or (gamma == 0 and gammadot == 0):
            return a.copy()

        def g(u):
            return u - a + gamma * u * u - 2.0 * gammadot * u**3

        def dg(u):
            return 1.0 + 2.0 * gamma * u - 6.0 * gammadot * u * u

        return np.asarray(newton(g, a.copy(), fprime=dg, tol=1e-15, maxiter=100), dtype=float)

    def functional(self, u) -> float:
        return float(np.abs(u).max())

    def exact(self, t: float) -> np.ndarray:
        return np.array([self.u0 / (1.0 + self.u0 * t)])

    def initial(self) -> np.ndarray:
        return np.array([self.u0])


@dataclass(frozen=True)
class SplitRiccatiProblem(SemiDiscreteSystem):
    """``u' = -u^2 - lam u`` split as ``F_ex = -u^2`` and ``F_im = -lam u``.

    ``fdot_ex = 2u^3`` and ``fdot_im = lam^2 u`` are the chain-rule second
    derivatives of each part; the exact solution is
    ``lam / ((lam/u0 + 1) e^{lam t} - 1)``.
    """

    lam: float = 1.0
    u0: float = 1.0

    @property
    def dim(self) -> int:
        return 1

    def f_ex(self, u):
        return -np.asarray(u, dtype=float) ** 2

    def fdot_ex(self, u):
        return 2.0 * np.asarray(u, dtype=float) ** 3

    def f_im(self, u):
        return -self.lam * np.asarray(u, dtype=float)

    def fdot_im(self, u):
        return self.lam**2 * np.asarray(u, dtype=float)

    def implicit_stage_solve(self, a, gamma: float, gammadot: float):
        a = np.asarray(a, dtype=float)
        return a / (1.0 + gamma * self.lam - gammadot * self.lam**2)

    def functional(self, u) -> float:
        return float(np.abs(u).max())

    def exact(self, t: float) -> np.ndarray:
        lam = self.lam
        return np.array([lam / ((lam / self.u0 + 1.0) * math.exp(lam * t) - 1.0)])

    def initial(self) -> np.ndarray:
        return np.array([self.u0])
