"""Coefficient containers for two-derivative time integrators.

Five representations are used throughout the package:

* :class:`ButcherTD` -- Butcher form ``(A, Adot, b, bdot)`` of a single-operator
  two-derivative Runge--Kutta method.  Stages are
  ``y_i = u^n + dt * sum_j A_ij F(y_j) + dt**2 * sum_j Adot_ij Fdot(y_j)``.
* :class:`SOPair` -- the padded matrices ``S = [[A, 0], [b^T, 0]]`` and
  ``Sdot = [[Adot, 0], [bdot^T, 0]]`` used for SSP certification.
* :class:`ImplicitNDMethod` -- implicit methods written as convex combinations
  of previous stages plus diagonal implicit solves.
* :class:`ImexTDRK` and :class:`ImexTDGLM` -- implicit-explicit Runge--Kutta
  and general linear methods in their sign-structured (Shu--Osher type) form.

:func:`to_butcher_imex` and :func:`to_butcher_glm` convert the sign-structured
forms into :class:`ButcherIMEX` / :class:`ButcherGLM`, the forms in which the
order conditions are written.

All containers are immutable: arrays are copied on construction and marked
read-only, so instances can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "CONSISTENCY_TOL",
    "TableauError",
    "ButcherTD",
    "SOPair",
    "ImplicitNDMethod",
    "ImexTDRK",
    "ImexTDGLM",
    "ButcherIMEX",
    "ButcherGLM",
    "so_pair_from_butcher",
    "nd_to_butcher",
    "to_butcher_imex",
    "to_butcher_glm",
]

#: Tolerance for the row-sum consistency checks of the sign-structured forms.
CONSISTENCY_TOL = 1e-12


class TableauError(ValueError):
    """Raised when coefficient arrays violate a structural invariant."""


def _frozen(value: Any, ndim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim == 0 and ndim == 1:
        arr = arr.reshape(1)
    if arr.ndim != ndim:
        raise TableauError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise TableauError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _square(arr: np.ndarray, n: int, name: str) -> None:
    if arr.shape != (n, n):
        raise TableauError(f"{name} must have shape ({n}, {n}), got {arr.shape}")


def _vector(arr: np.ndarray, n: int, name: str) -> None:
    if arr.shape != (n,):
        raise TableauError(f"{name} must have length {n}, got shape {arr.shape}")


def _strictly_lower(mat: np.ndarray) -> bool:
    return bool(np.all(np.triu(mat) == 0.0))


def _require_strictly_lower(mat: np.ndarray, name: str) -> None:
    if not _strictly_lower(mat):
        raise TableauError(f"{name} must be strictly lower triangular")


def _check_rows(total: np.ndarray, what: str) -> None:
    bad = np.flatnonzero(np.abs(total - 1.0) > CONSISTENCY_TOL)
    if bad.size:
        i = int(bad[0])
        raise TableauError(
            f"{what} consistency violated at row {i + 1}: coefficients sum to {total[i]!r}"
        )


def _freeze_meta(meta: Mapping[str, Any] | None) -> Mapping[str, Any]:
    return MappingProxyType(dict(meta or {}))


@dataclass(frozen=True, eq=False)
class ButcherTD:
    """Butcher form of a two-derivative Runge--Kutta method.

    ``c`` and ``cdot`` are recomputed from ``A`` and ``Adot`` on access so they
    can never drift out of sync with the matrices.  ``meta`` carries free-form
    provenance such as the root used by a parametric family.
    """

    A: np.ndarray
    Adot: np.ndarray
    b: np.ndarray
    bdot: np.ndarray
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        A = _frozen(self.A, 2, "A")
        s = A.shape[0]
        _square(A, s, "A")
        Adot = _frozen(self.Adot, 2, "Adot")
        _square(Adot, s, "Adot")
        b = _frozen(self.b, 1, "b")
        _vector(b, s, "b")
        bdot = _frozen(self.bdot, 1, "bdot")
        _vector(bdot, s, "bdot")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Adot", Adot)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "bdot", bdot)
        object.__setattr__(self, "meta", _freeze_meta(self.meta))

    @property
    def s(self) -> int:
        return int(self.A.shape[0])

    @property
    def c(self) -> np.ndarray:
        return self.A @ np.ones(self.s)

    @property
    def cdot(self) -> np.ndarray:
        return self.Adot @ np.ones(self.s)

    @property
    def explicit(self) -> bool:
        """True when both ``A`` and ``Adot`` are strictly lower triangular."""
        return _strictly_lower(self.A) and _strictly_lower(self.Adot)


@dataclass(frozen=True, eq=False)
class SOPair:
    """Padded matrices ``(S, Sdot)`` of size ``(s+1) x (s+1)``.

    The last row holds the output weights and the last column is zero, so the
    extra row represents ``u^{n+1}`` as one more "stage".
    """

    S: np.ndarray
    Sdot: np.ndarray

    def __post_init__(self) -> None:
        S = _frozen(self.S, 2, "S")
        n = S.shape[0]
        _square(S, n, "S")
        Sdot = _frozen(self.Sdot, 2, "Sdot")
        _square(Sdot, n, "Sdot")
        if n < 2:
            raise TableauError("S must be at least 2 x 2")
        if np.any(S[:, -1] != 0.0) or np.any(Sdot[:, -1] != 0.0):
            raise TableauError("last column of S and Sdot must be zero")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Sdot", Sdot)

    @property
    def n(self) -> int:
        return int(self.S.shape[0])

    @property
    def explicit(self) -> bool:
        return _strictly_lower(self.S) and _strictly_lower(self.Sdot)

    def to_butcher(self) -> ButcherTD:
        """Recover ``(A, Adot, b, bdot)`` by block extraction."""
        s = self.n - 1
        return ButcherTD(self.S[:s, :s], self.Sdot[:s, :s], self.S[s, :s], self.Sdot[s, :s])


def so_pair_from_butcher(m: ButcherTD) -> SOPair:
    """Assemble ``S = [[A, 0], [b^T, 0]]`` and ``Sdot = [[Adot, 0], [bdot^T, 0]]``."""
    s = m.s
    S = np.zeros((s + 1, s + 1))
    Sdot = np.zeros((s + 1, s + 1))
    S[:s, :s] = m.A
    S[s, :s] = m.b
    Sdot[:s, :s] = m.Adot
    Sdot[s, :s] = m.bdot
    return SOPair(S, Sdot)


@dataclass(frozen=True, eq=False)
class ImplicitNDMethod:
    """Implicit two-derivative method with diagonal implicit stages.

    Stage ``i`` reads
    ``u_i = Re_i u^n + sum_{j<i} P_ij u_j + dt D_i G(u_i) + dt**2 Ddot_i Gdot(u_i)``
    and the step result is the last stage.
    """

    Re: np.ndarray
    P: np.ndarray
    D: np.ndarray
    Ddot: np.ndarray
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        Re = _frozen(self.Re, 1, "Re")
        s = Re.shape[0]
        P = _frozen(self.P, 2, "P")
        _square(P, s, "P")
        _require_strictly_lower(P, "P")
        D = _frozen(self.D, 1, "D")
        _vector(D, s, "D")
        Ddot = _frozen(self.Ddot, 1, "Ddot")
        _vector(Ddot, s, "Ddot")
        _check_rows(Re + P.sum(axis=1), "stage")
        for name, val in (("Re", Re), ("P", P), ("D", D), ("Ddot", Ddot)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "meta", _freeze_meta(self.meta))

    @property
    def s(self) -> int:
        return int(self.Re.shape[0])


@dataclass(frozen=True, eq=False)
class ImexTDRK:
    """Implicit-explicit two-derivative Runge--Kutta method.

    Stage ``i`` is
    ``Re_i u^n + sum_j P_ij u_j + sum_j W_ij (u_j + dt/r F_ex(u_j))
    + dt D_i F_im(u_i) + dt**2 Ddot_i Fdot_im(u_i)``; the step result is the
    last stage.
    """

    Re: np.ndarray
    P: np.ndarray
    W: np.ndarray
    D: np.ndarray
    Ddot: np.ndarray
    r: float
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        Re = _frozen(self.Re, 1, "Re")
        s = Re.shape[0]
        P = _frozen(self.P, 2, "P")
        W = _frozen(self.W, 2, "W")
        for name, mat in (("P", P), ("W", W)):
            _square(mat, s, name)
            _require_strictly_lower(mat, name)
        D = _frozen(self.D, 1, "D")
        _vector(D, s, "D")
        Ddot = _frozen(self.Ddot, 1, "Ddot")
        _vector(Ddot, s, "Ddot")
        r = float(self.r)
        if not r > 0.0:
            raise TableauError("r must be positive")
        _check_rows(Re + P.sum(axis=1) + W.sum(axis=1), "stage")
        for name, val in (("Re", Re), ("P", P), ("W", W), ("D", D), ("Ddot", Ddot), ("r", r)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "meta", _freeze_meta(self.meta))

    @property
    def s(self) -> int:
        return int(self.Re.shape[0])


@dataclass(frozen=True, eq=False)
class ImexTDGLM:
    """Implicit-explicit two-derivative general linear method.

    ``R`` has one column per stored step, oldest first: column ``l`` multiplies
    ``u^{n+l+1-k}``, so the last column multiplies ``u^n``.
    """

    R: np.ndarray
    P: np.ndarray
    W: np.ndarray
    D: np.ndarray
    Ddot: np.ndarray
    Gamma: np.ndarray
    Q: np.ndarray
    V: np.ndarray
    r: float
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        R = _frozen(self.R, 2, "R")
        s, k = R.shape
        P = _frozen(self.P, 2, "P")
        W = _frozen(self.W, 2, "W")
        for name, mat in (("P", P), ("W", W)):
            _square(mat, s, name)
            _require_strictly_lower(mat, name)
        D = _frozen(self.D, 1, "D")
        Ddot = _frozen(self.Ddot, 1, "Ddot")
        Q = _frozen(self.Q, 1, "Q")
        V = _frozen(self.V, 1, "V")
        for name, vec in (("D", D), ("Ddot", Ddot), ("Q", Q), ("V", V)):
            _vector(vec, s, name)
        Gamma = _frozen(self.Gamma, 1, "Gamma")
        _vector(Gamma, k, "Gamma")
        r = float(self.r)
        if not r > 0.0:
            raise TableauError("r must be positive")
        _check_rows(R.sum(axis=1) + P.sum(axis=1) + W.sum(axis=1), "stage")
        _check_rows(np.array([Gamma.sum() + Q.sum() + V.sum()]), "output")
        for name, val in (
            ("R", R), ("P", P), ("W", W), ("D", D), ("Ddot", Ddot),
            ("Gamma", Gamma), ("Q", Q), ("V", V), ("r", r),
        ):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "meta", _freeze_meta(self.meta))

    @property
    def s(self) -> int:
        return int(self.R.shape[0])

    @property
    def k(self) -> int:
        return int(self.R.shape[1])


@dataclass(frozen=True, eq=False)
class ButcherIMEX:
    """Butcher form ``U = e u^n + dt Ahat F_ex + dt A F_im + dt**2 Adot Fdot_im``."""

    Ahat: np.ndarray
    A: np.ndarray
    Adot: np.ndarray
    bhat: np.ndarray
    b: np.ndarray
    bdot: np.ndarray

    def __post_init__(self) -> None:
        Ahat = _frozen(self.Ahat, 2, "Ahat")
        s = Ahat.shape[0]
        for name in ("Ahat", "A", "Adot"):
            mat = _frozen(getattr(self, name), 2, name)
            _square(mat, s, name)
            object.__setattr__(self, name, mat)
        for name in ("bhat", "b", "bdot"):
            vec = _frozen(getattr(self, name), 1, name)
            _vector(vec, s, name)
            object.__setattr__(self, name, vec)

    @property
    def s(self) -> int:
        return int(self.A.shape[0])

    @property
    def chat(self) -> np.ndarray:
        return self.Ahat @ np.ones(self.s)

    @property
    def c(self) -> np.ndarray:
        return self.A @ np.ones(self.s)

    @property
    def cdot(self) -> np.ndarray:
        return self.Adot @ np.ones(self.s)


@dataclass(frozen=True, eq=False)
class ButcherGLM:
    """Butcher-type form of an IMEX two-derivative general linear method.

    ``Y = T U^n + dt Ahat F_ex(Y) + dt A F_im(Y) + dt**2 Adot Fdot_im(Y)`` and
    ``u^{n+1} = theta U^n + dt bhat F_ex(Y) + dt b F_im(Y) + dt**2 bdot Fdot_im(Y)``
    where ``U^n`` stacks the ``k`` stored steps at times ``t_n + ell * dt``.
    """

    T: np.ndarray
    Ahat: np.ndarray
    A: np.ndarray
    Adot: np.ndarray
    theta: np.ndarray
    bhat: np.ndarray
    b: np.ndarray
    bdot: np.ndarray

    def __post_init__(self) -> None:
        T = _frozen(self.T, 2, "T")
        s, k = T.shape
        object.__setattr__(self, "T", T)
        for name in ("Ahat", "A", "Adot"):
            mat = _frozen(getattr(self, name), 2, name)
            _square(mat, s, name)
            object.__setattr__(self, name, mat)
        for name in ("bhat", "b", "bdot"):
            vec = _frozen(getattr(self, name), 1, name)
            _vector(vec, s, name)
            object.__setattr__(self, name, vec)
        theta = _frozen(self.theta, 1, "theta")
        _vector(theta, k, "theta")
        object.__setattr__(self, "theta", theta)

    @property
    def s(self) -> int:
        return int(self.T.shape[0])

    @property
    def k(self) -> int:
        return int(self.T.shape[1])

    @property
    def ell(self) -> np.ndarray:
        """Step offsets ``[1-k, 2-k, ..., 0]`` of the stored solution values."""
        return np.arange(1 - self.k, 1, dtype=np.float64)


def _resolvent(P: np.ndarray, W: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(I - P - W) X = rhs``; the matrix is unit lower triangular."""
    M = np.eye(P.shape[0]) - P - W
    return solve_triangular(M, rhs, lower=True, unit_diagonal=True)


def nd_to_butcher(m: ImplicitNDMethod) -> ButcherTD:
    """Butcher form of an implicit method: ``A = (I-P)^-1 D``, ``Adot = (I-P)^-1 Ddot``."""
    zero = np.zeros_like(m.P)
    A = _resolvent(m.P, zero, np.diag(m.D))
    Adot = _resolvent(m.P, zero, np.diag(m.Ddot))
    return ButcherTD(A, Adot, A[-1], Adot[-1], meta=dict(m.meta))


def to_butcher_imex(m: ImexTDRK) -> ButcherIMEX:
    """Convert an IMEX method to Butcher form; the weights are the last rows."""
    Ahat = _resolvent(m.P, m.W, m.W) / m.r
    A = _resolvent(m.P, m.W, np.diag(m.D))
    Adot = _resolvent(m.P, m.W, np.diag(m.Ddot))
    return ButcherIMEX(Ahat, A, Adot, Ahat[-1], A[-1], Adot[-1])


def to_butcher_glm(m: ImexTDGLM) -> ButcherGLM:
    """Convert an IMEX general linear method to its Butcher-type form."""
    T = _resolvent(m.P, m.W, m.R)
    LW = _resolvent(m.P, m.W, m.W)
    LD = _resolvent(m.P, m.W, np.diag(m.D))
    LDdot = _resolvent(m.P, m.W, np.diag(m.Ddot))
    QV = m.Q + m.V
    return ButcherGLM(
        T=T,
        Ahat=LW / m.r,
        A=LD,
        Adot=LDdot,
        theta=m.Gamma + QV @ T,
        bhat=(QV @ LW + m.V) / m.r,
        b=QV @ LD,
        bdot=QV @ LDdot,
    )
