"""Total-variation sweeps over the Courant number for explicit methods.

For each ``lambda = dt/dx`` on a grid, an explicit method advances the step
initial condition of :class:`~tdssp.problems.AdvectionProblem` for a fixed
number of steps and records the largest per-step rise of the total
variation.  ``lambda_obs`` is the right edge of the non-rising prefix of the
grid, refined by bisection.

Coverage: the registry has no three-stage fourth-order method for the
second-derivative condition (its coefficients are not available), so the
sweep cannot produce a value for that method.  The three-stage
fourth-order method available here, ``ts-3s4p``, satisfies the Taylor
series condition instead and is swept with the squared-upwind stencil.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import kernels
from .problems import step_ic
from .tableaux import ButcherTD

__all__ = ["SweepRow", "SweepResult", "MethodClassError", "tv_rise", "tv_sweep", "CSV_SCHEMA"]

CSV_SCHEMA = "# tdssp tv-sweep v1: lambda,max_rise_per_step,max_rise_over_initial,phase"


class MethodClassError(ValueError):
    """The method cannot be used in a TV sweep (not an explicit two-derivative RK method)."""


@dataclass(frozen=True)
class SweepRow:
    lam: float
    max_rise_per_step: float
    max_rise_over_initial: float
    phase: str = "grid"


@dataclass(frozen=True)
class SweepResult:
    """Rows of the sweep (grid points first, then bisection points) and ``lambda_obs``.

    ``lambda_obs`` is 0 when the first grid point already shows a rise.
    """

    method: str
    variant: str
    m: int
    steps: int
    rise_tol: float
    rows: tuple[SweepRow, ...]
    lambda_obs: float
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def rises_everywhere(self) -> bool:
        return all(r.max_rise_per_step > self.rise_tol for r in self.rows if r.phase == "grid")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(CSV_SCHEMA + "\n")
        buf.write("lambda,max_rise_per_step,max_rise_over_initial,phase\n")
        for r in self.rows:
            buf.write(f"{r.lam!r},{r.max_rise_per_step!r},{r.max_rise_over_initial!r},{r.phase}\n")
        buf.write(f"# method={self.method} variant={self.variant} m={self.m} steps={self.steps} "
                  f"rise_tol={self.rise_tol!r} lambda_obs={self.lambda_obs:.6f}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def summary(self) -> dict[str, Any]:
        return {"method": self.method, "variant": self.variant, "lambda_obs": self.lambda_obs,
                "rises_everywhere": self.rises_everywhere, "diagnostics": list(self.diagnostics)}


def tv_rise(m: ButcherTD, lam: float, u0: np.ndarray, steps: int, squared: bool) -> tuple[float, float]:
    """``(max per-step TV rise, max rise over the initial TV)`` after ``steps`` steps.

    A run that produces non-finite values counts as an infinite rise.
    """
    _, tv = kernels.advect_tdrk(u0, m.A, m.Adot, m.b, m.bdot, lam, squared, steps)
    if not np.all(np.isfinite(tv)):
        return math.inf, math.inf
    return float(np.max(np.diff(tv))), float(np.max(tv[1:] - tv[0]))


def _resolve(method: Any) -> tuple[str, ButcherTD, str]:
    from .registry import MethodSpec, lookup

    spec = lookup(method) if isinstance(method, str) else method
    if isinstance(spec, MethodSpec):
        if spec.kind != "explicit":
            raise MethodClassError(f"tv-sweep needs an explicit method; {spec.name} is {spec.kind}")
        variant = "squared-upwind" if spec.condition_class == "TS" else "centered"
        return spec.name, spec.method, variant
    if isinstance(spec, ButcherTD):
        if not spec.explicit:
            raise MethodClassError("tv-sweep needs an explicit tableau")
        return "custom", spec, "centered"
    raise MethodClassError(f"cannot sweep {type(spec).__name__}")


def tv_sweep(method: Any, *, dx: float = 1.0 / 1600, steps: int = 50, lambda_min: float = 0.05,
             lambda_max: float = 2.0, lambda_step: float = 0.0025, refine: float = 1e-4,
             rise_tol: float = 1e-10, variant: str | None = None, workers: int | None = None,
             ) -> SweepResult:
    """Sweep ``lambda`` and locate ``lambda_obs``.

    ``method`` is a registry name, a :class:`~tdssp.registry.MethodSpec` or an
    explicit :class:`~tdssp.tableaux.ButcherTD`.  The second-derivative
    stencil follows the method's condition class (centered for SD,
    squared-upwind for TS) unless ``variant`` overrides it.  Grid points are
    evaluated in a thread pool (the compiled kernel releases the GIL); the
    reduction is in grid order, so results do not depend on ``workers``.
    """
    name, tab, default_variant = _resolve(method)
    variant = variant or default_variant
    if variant not in ("centered", "squared-upwind"):
        raise ValueError(f"unknown variant {variant!r}")
    squared = variant == "squared-upwind"
    m = int(round(1.0 / dx))
    if m < 4 or abs(m * dx - 1.0) > 1e-9:
        raise ValueError(f"dx must be 1/m for an integer m >= 4, got {dx}")
    if not (0 < lambda_min <= lambda_max and lambda_step > 0 and refine > 0 and steps >= 1):
        raise ValueError("invalid sweep parameters")
    u0 = step_ic(m)
    n_grid = int(math.floor((lambda_max - lambda_min) / lambda_step + 1e-9)) + 1
    grid = [lambda_min + i * lambda_step for i in range(n_grid)]

    def run(lam: float) -> SweepRow:
        per, over = tv_rise(tab, lam, u0, steps, squared)
        return SweepRow(lam, per, over)

    if workers == 1:
        rows = [run(lam) for lam in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, grid))

    ok = [r.max_rise_per_step <= rise_tol for r in rows]
    diagnostics: list[str] = []
    first_bad = next((i for i, flag in enumerate(ok) if not flag), None)
    if first_bad is None:
        return SweepResult(name, variant, m, steps, rise_tol, tuple(rows), grid[-1])
    later = [grid[i] for i in range(first_bad + 1, n_grid) if ok[i]]
    if later:
        diagnostics.append(f"no TV rise again at lambda={later[0]:.4f} beyond the first rise")
    if first_bad == 0:
        return SweepResult(name, variant, m, steps, rise_tol, tuple(rows), 0.0, tuple(diagnostics))
    lo, hi = grid[first_bad - 1], grid[first_bad]
    extra: list[SweepRow] = []
    while hi - lo > refine:
        mid = 0.5 * (lo + hi)
        row = run(mid)
        extra.append(SweepRow(row.lam, row.max_rise_per_step, row.max_rise_over_initial, "refine"))
        if row.max_rise_per_step <= rise_tol:
            lo = mid
        else:
            hi = mid
    return SweepResult(name, variant, m, steps, rise_tol, tuple(rows + extra), lo, tuple(diagnostics))
