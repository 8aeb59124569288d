"""Time-stepping engines for explicit, implicit, IMEX and IMEX-GLM methods.

All engines act on a :class:`SemiDiscreteSystem`, which supplies the
explicit and implicit right-hand sides, their second derivatives, a solver
for the implicit stage equation

    ``u = a + gamma f_im(u) + gammadot fdot_im(u)``

and the convex functional that is monitored.  Stages are always assembled
in increasing index order so that runs are bitwise reproducible.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Literal, Sequence

import numpy as np

from .tableaux import ButcherTD, ImexTDGLM, ImexTDRK, ImplicitNDMethod

__all__ = [
    "SemiDiscreteSystem",
    "CallableSystem",
    "BlowUpError",
    "StageSolveError",
    "HistoryError",
    "StepHistory",
    "MonitorReport",
    "step_explicit",
    "step_implicit_nd",
    "step_imex_rk",
    "step_imex_glm",
    "integrate",
    "observed_orders",
    "STAGE_RESIDUAL_TOL",
    "BLOWUP_FACTOR",
]

#: Relative tolerance on the implicit stage equation residual.
STAGE_RESIDUAL_TOL = 1e-12
#: Functional growth beyond this factor of the initial value counts as blow-up.
BLOWUP_FACTOR = 1e10


class BlowUpError(FloatingPointError):
    """The state became non-finite or the functional exploded."""

    def __init__(self, message: str, step: int | None = None, stage: int | None = None):
        super().__init__(message)
        self.step = step
        self.stage = stage


class StageSolveError(RuntimeError):
    """An implicit stage solve returned a state that does not satisfy its equation."""


class HistoryError(ValueError):
    """A GLM step was attempted without exactly ``k`` stored states."""


# ---------------------------------------------------------------------------
# systems


class SemiDiscreteSystem:
    """Interface for ``u_t = F_ex(u) + F_im(u)``.

    Subclasses override what they need; the defaults describe an absent
    operator (zero right-hand side, trivial implicit solve).  ``dt_fe`` is the
    forward-Euler strong-stability limit of the explicit part.
    """

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def dt_fe(self) -> float:
        return math.inf

    def f_ex(self, u: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(u, dtype=float))

    def fdot_ex(self, u: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(u, dtype=float))

    def f_im(self, u: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(u, dtype=float))

    def fdot_im(self, u: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(u, dtype=float))

    def implicit_stage_solve(self, a: np.ndarray, gamma: float, gammadot: float) -> np.ndarray:
        return np.array(a, dtype=float)

    def functional(self, u: np.ndarray) -> float:
        return float(np.abs(u).max())

    def stage_residual_scale(self, u: np.ndarray, gamma: float, gammadot: float) -> float:
        """Rounding-error size of ``gamma f_im(u) + gammadot fdot_im(u)`` near ``u``.

        Stiff systems whose operators divide by a small parameter evaluate the
        stage residual with an error far above ``|gamma f_im(u)|`` itself; they
        override this so the engine's residual check stays meaningful.
        """
        return 0.0

    exact: Callable[[float], np.ndarray] | None = None


@dataclass(frozen=True, eq=False)
class CallableSystem(SemiDiscreteSystem):
    """A system assembled from plain functions; missing pieces are zero."""

    n: int
    F_ex: Callable[[np.ndarray], np.ndarray] | None = None
    Fdot_ex: Callable[[np.ndarray], np.ndarray] | None = None
    F_im: Callable[[np.ndarray], np.ndarray] | None = None
    Fdot_im: Callable[[np.ndarray], np.ndarray] | None = None
    solve: Callable[[np.ndarray, float, float], np.ndarray] | None = None
    norm: Callable[[np.ndarray], float] | None = None
    forward_euler_dt: float = math.inf
    exact_solution: Callable[[float], np.ndarray] | None = None

    @property
    def dim(self) -> int:
        return self.n

    @property
    def dt_fe(self) -> float:
        return self.forward_euler_dt

    @property
    def exact(self):  # type: ignore[override]
        return self.exact_solution

    def _call(self, fn, u):
        u = np.asarray(u, dtype=float)
        return np.zeros_like(u) if fn is None else np.asarray(fn(u), dtype=float)

    def f_ex(self, u):
        return self._call(self.F_ex, u)

    def fdot_ex(self, u):
        return self._call(self.Fdot_ex, u)

    def f_im(self, u):
        return self._call(self.F_im, u)

    def fdot_im(self, u):
        return self._call(self.Fdot_im, u)

    def implicit_stage_solve(self, a, gamma, gammadot):
        if self.solve is None:
            if self.F_im is not None or self.Fdot_im is not None:
                raise NotImplementedError("system has an implicit part but no stage solver")
            return np.array(a, dtype=float)
        return np.asarray(self.solve(np.asarray(a, dtype=float), gamma, gammadot), dtype=float)

    def functional(self, u):
        return float(np.abs(u).max()) if self.norm is None else float(self.norm(u))


# ---------------------------------------------------------------------------
# helpers


def _finite(y: np.ndarray, stage: int | None) -> np.ndarray:
    if not np.all(np.isfinite(y)):
        where = "output" if stage is None else f"stage {stage}"
        raise BlowUpError(f"non-finite values at {where}", stage=stage)
    return y


def _solve(sys: SemiDiscreteSystem, a: np.ndarray, gamma: float, gammadot: float, stage: int,
           check: bool) -> np.ndarray:
    if gamma == 0.0 and gammadot == 0.0:
        return a
    if gammadot > 0.0:
        warnings.warn(f"positive second-derivative coefficient {gammadot} passed to the stage solver",
                      RuntimeWarning, stacklevel=3)
    u = np.asarray(sys.implicit_stage_solve(a, gamma, gammadot), dtype=float)
    _finite(u, stage)
    if check:
        gf = gamma * sys.f_im(u)
        gfd = gammadot * sys.fdot_im(u)
        res = float(np.abs(u - a - gf - gfd).max())
        # scale with every term of the equation: for stiff stages gamma*f_im is
        # large and its rounding error alone exceeds an absolute 1e-12
        scale = (1.0 + float(np.abs(a).max()) + float(np.abs(gf).max()) + float(np.abs(gfd).max())
                 + sys.stage_residual_scale(u, gamma, gammadot))
        if res > STAGE_RESIDUAL_TOL * scale:
            raise StageSolveError(f"stage {stage}: implicit residual {res:.3e} exceeds "
                                  f"{STAGE_RESIDUAL_TOL:g} x {scale:.3e}")
    return u


def _stage_log(log: list | None, sys: SemiDiscreteSystem, y: np.ndarray) -> None:
    if log is not None:
        log.append(sys.functional(y))


# ---------------------------------------------------------------------------
# single steps


def step_explicit(m: ButcherTD, sys: SemiDiscreteSystem, u: np.ndarray, dt: float,
                  stage_log: list | None = None) -> np.ndarray:
    """One step ``y_i = u + dt sum a_ij F(y_j) + dt^2 sum adot_ij Fdot(y_j)``."""
    if not m.explicit:
        raise ValueError("step_explicit needs strictly lower triangular A and Adot")
    u = np.asarray(u, dtype=float)
    if dt == 0.0:
        return u.copy()
    dt2 = dt * dt
    F: list[np.ndarray] = []
    Fd: list[np.ndarray] = []
    for i in range(m.s):
        y = u.copy()
        for j in range(i):
            if m.A[i, j] != 0.0:
                y = y + (dt * m.A[i, j]) * F[j]
            if m.Adot[i, j] != 0.0:
                y = y + (dt2 * m.Adot[i, j]) * Fd[j]
        _finite(y, i)
        _stage_log(stage_log, sys, y)
        F.append(np.asarray(sys.f_ex(y), dtype=float))
        Fd.append(np.asarray(sys.fdot_ex(y), dtype=float))
    out = u.copy()
    for j in range(m.s):
        if m.b[j] != 0.0:
            out = out + (dt * m.b[j]) * F[j]
        if m.bdot[j] != 0.0:
            out = out + (dt2 * m.bdot[j]) * Fd[j]
    return _finite(out, None)


def step_implicit_nd(m: ImplicitNDMethod, sys: SemiDiscreteSystem, u: np.ndarray, dt: float,
                     check_residual: bool = True, stage_log: list | None = None) -> np.ndarray:
    """One step of an implicit method; each stage is solved by ``sys.implicit_stage_solve``."""
    u = np.asarray(u, dtype=float)
    if dt == 0.0:
        return u.copy()
    Y: list[np.ndarray] = []
    for i in range(m.s):
        a = m.Re[i] * u
        for j in range(i):
            if m.P[i, j] != 0.0:
                a = a + m.P[i, j] * Y[j]
        y = _solve(sys, a, dt * m.D[i], dt * dt * m.Ddot[i], i, check_residual)
        _stage_log(stage_log, sys, y)
        Y.append(y)
    return Y[-1].copy()


def _explicit_stage_terms(P_row, W_row, Y, Fe, upto: int):
    a = None
    for j in range(upto):
        if P_row[j] != 0.0:
            term = P_row[j] * Y[j]
            a = term if a is None else a + term
        if W_row[j] != 0.0:
            term = W_row[j] * Fe[j]
            a = term if a is None else a + term
    return a


def _fe(sys: SemiDiscreteSystem, y: np.ndarray, dt: float, r: float) -> np.ndarray:
    """Forward-Euler substep ``y + (dt/r) F_ex(y)``."""
    return y + (dt / r) * np.asarray(sys.f_ex(y), dtype=float)


def step_imex_rk(m: ImexTDRK, sys: SemiDiscreteSystem, u: np.ndarray, dt: float,
                 check_residual: bool = True, stage_log: list | None = None) -> np.ndarray:
    """One IMEX step.

    Stage ``i`` is assembled as
    ``Re_i u + sum_j P_ij y_j + sum_j W_ij (y_j + dt/r F_ex(y_j))`` and then
    solved with ``gamma = dt D_i`` and ``gammadot = dt^2 Ddot_i``.
    """
    u = np.asarray(u, dtype=float)
    if dt == 0.0:
        return u.copy()
    needs_fe = np.any(m.W != 0.0, axis=0)
    Y: list[np.ndarray] = []
    Fe: list[np.ndarray | None] = []
    for i in range(m.s):
        a = m.Re[i] * u
        extra = _explicit_stage_terms(m.P[i], m.W[i], Y, Fe, i)
        if extra is not None:
            a = a + extra
        _finite(a, i)
        y = _solve(sys, a, dt * m.D[i], dt * dt * m.Ddot[i], i, check_residual)
        _stage_log(stage_log, sys, y)
        Y.append(y)
        Fe.append(_fe(sys, y, dt, m.r) if needs_fe[i] else None)
    return Y[-1].copy()


class StepHistory:
    """The ``k`` most recent accepted states, oldest first."""

    def __init__(self, k: int, states: Iterable[np.ndarray] = ()):
        if k < 1:
            raise ValueError("k must be at least 1")
        self.k = int(k)
        self._ring: deque[np.ndarray] = deque(maxlen=self.k)
        for s in states:
            self.push(s)

    def push(self, u: np.ndarray) -> None:
        self._ring.append(np.array(u, dtype=float))

    @property
    def ready(self) -> bool:
        return len(self._ring) == self.k

    def states(self) -> list[np.ndarray]:
        return list(self._ring)

    def __len__(self) -> int:
        return len(self._ring)

    def __getitem__(self, i: int) -> np.ndarray:
        return self._ring[i]


def step_imex_glm(m: ImexTDGLM, sys: SemiDiscreteSystem, hist: StepHistory, dt: float,
                  check_residual: bool = True, stage_log: list | None = None) -> np.ndarray:
    """One IMEX-GLM step from ``k`` stored states; the caller pushes the result."""
    if len(hist) != m.k:
        raise HistoryError(f"GLM with k={m.k} needs exactly {m.k} stored states, got {len(hist)}")
    U = hist.states()
    if dt == 0.0:
        return U[-1].copy()
    needs_fe = np.any(m.W != 0.0, axis=0) | (m.V != 0.0)
    Y: list[np.ndarray] = []
    Fe: list[np.ndarray | None] = []
    for i in range(m.s):
        a = np.zeros_like(U[-1])
        for l in range(m.k):
            if m.R[i, l] != 0.0:
                a = a + m.R[i, l] * U[l]
        extra = _explicit_stage_terms(m.P[i], m.W[i], Y, Fe, i)
        if extra is not None:
            a = a + extra
        _finite(a, i)
        y = _solve(sys, a, dt * m.D[i], dt * dt * m.Ddot[i], i, check_residual)
        _stage_log(stage_log, sys, y)
        Y.append(y)
        Fe.append(_fe(sys, y, dt, m.r) if needs_fe[i] else None)
    out = np.zeros_like(U[-1])
    for l in range(m.k):
        if m.Gamma[l] != 0.0:
            out = out + m.Gamma[l] * U[l]
    for j in range(m.s):
        if m.Q[j] != 0.0:
            out = out + m.Q[j] * Y[j]
        if m.V[j] != 0.0:
            out = out + m.V[j] * Fe[j]
    return _finite(out, None)


# ---------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class MonitorReport:
    """Functional values along a run and the rises that the SSP theorems bound.

    ``values[n]`` is the functional at step ``n`` (``values[0]`` is the
    initial state).  ``max_rise_window`` is the largest excess of a
    GLM-produced step over the maximum of the ``k`` preceding values (for
    one-step methods it equals ``max_rise_per_step``).
    """

    values: tuple[float, ...]
    dt: float
    t0: float = 0.0
    k: int = 1
    starting_policy: str = "none"
    stage_values: tuple[float, ...] = ()
    max_rise_per_step: float = field(init=False)
    max_rise_over_initial: float = field(init=False)
    max_rise_window: float = field(init=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if len(v) < 2:
            per = over = win = 0.0
        else:
            per = float(np.max(v[1:] - v[:-1]))
            over = float(np.max(v[1:] - v[0]))
            rises = [v[n + 1] - max(v[max(0, n + 1 - self.k): n + 1])
                     for n in range(self.k - 1, len(v) - 1)]
            win = float(max(rises)) if rises else 0.0
        object.__setattr__(self, "max_rise_per_step", per)
        object.__setattr__(self, "max_rise_over_initial", over)
        object.__setattr__(self, "max_rise_window", win)

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    def to_csv(self, path=None) -> str:
        """CSV with columns ``step, t, functional, rise_from_prev, rise_from_initial``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "t", "functional", "rise_from_prev", "rise_from_initial"])
        v = self.values
        for n, val in enumerate(v):
            prev = 0.0 if n == 0 else val - v[n - 1]
            w.writerow([n, repr(self.t0 + n * self.dt), repr(val), repr(prev), repr(val - v[0])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


Starting = Literal["auto", "exact", "single-step"]


def _unwrap(method: Any) -> tuple[Any, int | None]:
    order = getattr(method, "order", None)
    inner = getattr(method, "method", method)
    return inner, order


def _one_step(m: Any, sys: SemiDiscreteSystem, check: bool, stage_log: list | None):
    if isinstance(m, ButcherTD):
        return lambda u, dt: step_explicit(m, sys, u, dt, stage_log)
    if isinstance(m, ImplicitNDMethod):
        return lambda u, dt: step_implicit_nd(m, sys, u, dt, check, stage_log)
    if isinstance(m, ImexTDRK):
        return lambda u, dt: step_imex_rk(m, sys, u, dt, check, stage_log)
    raise TypeError(f"cannot integrate with {type(m).__name__}")


def _bootstrap(order: int | None, sys: SemiDiscreteSystem, check: bool):
    """Equal-order one-step IMEX method, substepped to respect its own SSP limit."""
    from .registry import lookup

    name = "imex-rk-p3" if (order or 2) >= 3 else "imex-rk-p2"
    boot = lookup(name).method

    def advance(u, dt):
        limit = boot.r * sys.dt_fe
        n = 1 if not math.isfinite(limit) else max(1, math.ceil(dt / limit - 1e-12))
        h = dt / n
        for _ in range(n):
            u = step_imex_rk(boot, sys, u, h, check)
        return u

    return advance, f"single-step:{name}"


def integrate(method: Any, sys: SemiDiscreteSystem, u0: np.ndarray, dt: float, n_steps: int,
              starting: Starting = "auto", *, t0: float = 0.0, check_residual: bool = True,
              blowup_factor: float = BLOWUP_FACTOR, debug_stages: bool = False,
              ) -> tuple[np.ndarray, MonitorReport]:
    """Advance ``u0`` by ``n_steps`` steps of size ``dt`` and monitor the functional.

    ``method`` is a tableau object or a registry :class:`~tdssp.registry.MethodSpec`.
    For a ``k``-step GLM the first ``k-1`` steps are starting values: taken
    from ``sys.exact`` when ``starting`` is ``"exact"`` (or ``"auto"`` and the
    system has an exact solution), otherwise computed with the one-step IMEX
    method of the same order, substepped so that each substep respects that
    method's own SSP limit.  Raises :class:`BlowUpError` (with ``step`` set)
    when the state becomes non-finite or the functional exceeds
    ``blowup_factor`` times its initial value.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    m, order = _unwrap(method)
    u = np.array(u0, dtype=float)
    stage_log: list | None = [] if debug_stages else None
    f0 = sys.functional(u)
    values = [f0]
    limit = blowup_factor * max(abs(f0), np.finfo(float).tiny)

    def accept(n: int, new: np.ndarray) -> None:
        if not np.all(np.isfinite(new)):
            raise BlowUpError(f"non-finite state at step {n}", step=n)
        val = sys.functional(new)
        if not math.isfinite(val) or val > limit:
            raise BlowUpError(f"functional {val:.3e} exceeds {blowup_factor:g} x initial at step {n}",
                              step=n)
        values.append(val)

    policy = "none"
    k = 1
    try:
        if isinstance(m, ImexTDGLM):
            k = m.k
            hist = StepHistory(k, [u])
            if k > 1:
                exact = getattr(sys, "exact", None)
                if starting == "exact" and exact is None:
                    raise ValueError("starting='exact' needs a system with an exact solution")
                if starting in ("exact", "auto") and exact is not None:
                    advance, policy = None, "exact"
                else:
                    advance, policy = _bootstrap(order, sys, check_residual)
                for n in range(1, min(k, n_steps + 1)):
                    u = exact(t0 + n * dt) if advance is None else advance(u, dt)
                    u = np.array(u, dtype=float)
                    accept(n, u)
                    hist.push(u)
            for n in range(k, n_steps + 1):
                u = step_imex_glm(m, sys, hist, dt, check_residual, stage_log)
                accept(n, u)
                hist.push(u)
        else:
            step = _one_step(m, sys, check_residual, stage_log)
            for n in range(1, n_steps + 1):
                u = step(u, dt)
                accept(n, u)
    except BlowUpError as exc:
        if exc.step is None:
            exc.step = len(values)
            exc.args = (f"{exc.args[0]} (step {exc.step})",)
        raise
    report = MonitorReport(tuple(values), float(dt), float(t0), k, policy,
                           tuple(stage_log) if stage_log else ())
    return u, report


def observed_orders(errors: Sequence[float], dts: Sequence[float]) -> list[float]:
    """Pairwise convergence rates ``log(e_i/e_{i+1}) / log(dt_i/dt_{i+1})``."""
    return [math.log(errors[i] / errors[i + 1]) / math.log(dts[i] / dts[i + 1])
            for i in range(len(errors) - 1)]
