"""SSP certification: feasibility tests, bisection and sign certificates.

Explicit two-derivative methods are certified through their
:class:`~tdssp.tableaux.SOPair` ``(S, Sdot)``:

* under the second-derivative (SD) condition with constant ``K`` the method is
  SSP with coefficient ``r`` when, for ``M = I + r S + (r^2/K^2) Sdot``,
  ``M^-1 e``, ``r M^-1 S`` and ``(r^2/K^2) M^-1 Sdot`` are entrywise
  nonnegative;
* under the Taylor-series (TS) condition with constant ``kappa`` the matrix is
  ``M = I + r S + (2 r^2/kappa^2)(1-kappa) Sdot`` and the three expressions are
  ``M^-1 e``, ``r M^-1 (S - (2r/kappa) Sdot)`` and
  ``(2 r^2/kappa^2) M^-1 Sdot``.

Implicit, IMEX and GLM methods are certified by sign conditions on their
coefficient arrays.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Mapping

import numpy as np

from . import families as fam
from .tableaux import ButcherTD, ImexTDGLM, ImexTDRK, ImplicitNDMethod, SOPair, so_pair_from_butcher

__all__ = [
    "ENTRY_TOL",
    "Status",
    "ConditionCheck",
    "Certificate",
    "SingularMatrixError",
    "feasible_sd",
    "feasible_ts",
    "feasible",
    "max_r",
    "transformed_coefficients",
    "sign_certificate_implicit",
    "sign_certificate_imex",
    "sign_certificate_glm",
    "closed_form_C",
    "certify_explicit",
    "certify",
]

log = logging.getLogger(__name__)

#: Entries above ``-ENTRY_TOL`` count as nonnegative.
ENTRY_TOL = 1e-12

ConditionClass = Literal["SD", "TS"]


class SingularMatrixError(np.linalg.LinAlgError):
    """``M = I + r S + c Sdot`` could not be inverted."""


class Status(str, enum.Enum):
    """Outcome of a certificate.  ``UNCONDITIONAL`` stands for an infinite coefficient."""

    CERTIFIED = "certified"
    UNCONDITIONAL = "unconditional"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class ConditionCheck:
    """One entrywise inequality: its label, whether it holds, and its worst entry.

    For ``>= 0`` conditions the worst entry is the minimum; for ``Ddot <= 0``
    it is the maximum.
    """

    label: str
    passed: bool
    worst_entry: float

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "pass": bool(self.passed), "worst_entry": float(self.worst_entry)}


@dataclass(frozen=True, eq=False)
class Certificate:
    """Result of certifying one method under one condition class."""

    method: str | None
    condition_class: str
    status: Status
    certified_r: float
    per_condition: tuple[ConditionCheck, ...]
    param: float | None = None
    transformed: Mapping[str, np.ndarray] | None = None
    diagnostics: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.status is Status.UNCONDITIONAL and not math.isinf(self.certified_r):
            raise ValueError("unconditional certificates carry certified_r = inf")
        if self.status is Status.INFEASIBLE and self.certified_r != 0.0:
            raise ValueError("infeasible certificates carry certified_r = 0")
        if self.status is not Status.INFEASIBLE and not all(c.passed for c in self.per_condition):
            failing = [c.label for c in self.per_condition if not c.passed]
            raise ValueError(f"certificate with r > 0 has failing conditions {failing}")

    @property
    def ok(self) -> bool:
        return self.status is not Status.INFEASIBLE

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "method": self.method,
            "class": self.condition_class,
            "param": self.param,
            "status": self.status.value,
            "certified_r": "unconditional" if self.status is Status.UNCONDITIONAL else self.certified_r,
            "conditions": [c.to_dict() for c in self.per_condition],
        }
        if self.transformed is not None:
            doc["transformed"] = {k: np.asarray(v).tolist() for k, v in self.transformed.items()}
        if self.diagnostics:
            doc["diagnostics"] = list(self.diagnostics)
        return doc

    def to_json(self, **kwargs: Any) -> str:
        return json.dumps(self.to_dict(), **kwargs)


# ---------------------------------------------------------------------------
# explicit methods: SD and TS conditions


def _decomposition(so: SOPair, cls: ConditionClass, param: float, r: float) -> dict[str, np.ndarray]:
    S, Sd = so.S, so.Sdot
    n = S.shape[0]
    if cls == "SD":
        csd = r * r / (param * param)
        M = np.eye(n) + r * S + csd * Sd
        fe_mat = r * S
    elif cls == "TS":
        csd = 2.0 * r * r / (param * param)
        M = np.eye(n) + r * S + csd * (1.0 - param) * Sd
        fe_mat = r * (S - (2.0 * r / param) * Sd)
    else:
        raise ValueError(f"unknown condition class {cls!r}; use 'SD' or 'TS'")
    try:
        if np.all(np.triu(S) == 0) and np.all(np.triu(Sd) == 0):
            from scipy.linalg import solve_triangular

            Mi = solve_triangular(M, np.eye(n), lower=True, unit_diagonal=True)
        else:
            Mi = np.linalg.solve(M, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"I + rS + c*Sdot is singular at r={r}") from exc
    if not np.all(np.isfinite(Mi)):
        raise SingularMatrixError(f"I + rS + c*Sdot is singular at r={r}")
    return {"Re": Mi @ np.ones(n), "P": Mi @ fe_mat, "Q": csd * (Mi @ Sd)}


_LABELS = {"SD": ("M^-1 e >= 0", "r M^-1 S >= 0", "c M^-1 Sdot >= 0"),
           "TS": ("M^-1 e >= 0", "r M^-1 (S - 2r/kappa Sdot) >= 0", "c M^-1 Sdot >= 0")}


def _checks(parts: dict[str, np.ndarray], cls: ConditionClass, tol: float) -> tuple[ConditionCheck, ...]:
    out = []
    for label, key in zip(_LABELS[cls], ("Re", "P", "Q")):
        worst = float(parts[key].min())
        out.append(ConditionCheck(label, worst >= -tol, worst))
    return tuple(out)


def feasible(so: SOPair, cls: ConditionClass, param: float, r: float,
             tol: float = ENTRY_TOL) -> tuple[bool, tuple[ConditionCheck, ...]]:
    """Whether ``so`` is SSP with coefficient ``r`` under ``cls``; also the per-condition report."""
    if not param > 0:
        raise ValueError(f"K or kappa must be positive, got {param!r}")
    checks = _checks(_decomposition(so, cls, float(param), float(r)), cls, tol)
    return all(c.passed for c in checks), checks


def feasible_sd(so: SOPair, K: float, r: float, tol: float = ENTRY_TOL):
    """SD feasibility at ``r``: ``(ok, per-condition checks)``."""
    return feasible(so, "SD", K, r, tol)


def feasible_ts(so: SOPair, kappa: float, r: float, tol: float = ENTRY_TOL):
    """TS feasibility at ``r``: ``(ok, per-condition checks)``."""
    return feasible(so, "TS", kappa, r, tol)


def transformed_coefficients(so: SOPair, cls: ConditionClass, param: float, r: float) -> dict[str, np.ndarray]:
    """The nonnegative decomposition at ``r``.

    ``Re`` holds the weights of ``u^n``, ``P`` the forward-Euler weights and
    ``Q`` the second-derivative weights of each stage (last row: the update).
    """
    return _decomposition(so, cls, float(param), float(r))


def _ok(so: SOPair, cls: ConditionClass, param: float, r: float, tol: float) -> bool:
    try:
        return feasible(so, cls, param, r, tol)[0]
    except SingularMatrixError:
        return False


def max_r(so: SOPair, cls: ConditionClass, param: float, *, r_max: float = 100.0,
          scan: float = 1e-3, bisect_tol: float = 1e-10, entry_tol: float = ENTRY_TOL,
          diagnostics: list[str] | None = None) -> float:
    """Right edge of the feasible prefix ``(0, r*]``.

    ``r`` is scanned at ``scan, 2 scan, ...`` until the first infeasible point;
    the edge is then bisected to ``bisect_tol``.  Returns 0 if the first scan
    point already fails and ``r_max`` if nothing fails.  Feasibility is not
    assumed monotone: if ``diagnostics`` is a list, the scan continues past
    the prefix and records any feasible point found there.
    """
    if not param > 0:
        raise ValueError(f"K or kappa must be positive, got {param!r}")
    n = int(round(r_max / scan))
    last = 0.0
    first_bad = None
    for i in range(1, n + 1):
        r = i * scan
        if _ok(so, cls, param, r, entry_tol):
            last = r
        else:
            first_bad = i
            break
    if first_bad is None:
        return float(r_max)
    if diagnostics is not None:
        for i in range(first_bad + 1, n + 1):
            if _ok(so, cls, param, i * scan, entry_tol):
                msg = f"feasible again at r={i * scan:.6g} beyond the prefix edge"
                log.info(msg)
                diagnostics.append(msg)
                break
    if last == 0.0:
        return 0.0
    lo, hi = last, last + scan
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if _ok(so, cls, param, mid, entry_tol):
            lo = mid
        else:
            hi = mid
    return float(lo)


def certify_explicit(m: ButcherTD | SOPair, cls: ConditionClass, param: float, *,
                     method: str | None = None, r_max: float = 100.0,
                     entry_tol: float = ENTRY_TOL, scan_beyond: bool = False) -> Certificate:
    """Bisection certificate for an explicit method under ``cls``."""
    so = m if isinstance(m, SOPair) else so_pair_from_butcher(m)
    diags: list[str] | None = [] if scan_beyond else None
    r = max_r(so, cls, param, r_max=r_max, entry_tol=entry_tol, diagnostics=diags)
    if r > 0:
        parts = _decomposition(so, cls, param, r)
        return Certificate(method, cls, Status.CERTIFIED, r, _checks(parts, cls, entry_tol), param,
                           parts, tuple(diags or ()))
    _, checks = feasible(so, cls, param, 1e-3, entry_tol)
    return Certificate(method, cls, Status.INFEASIBLE, 0.0, checks, param, None, tuple(diags or ()))


# ---------------------------------------------------------------------------
# sign certificates


def _nonneg(label: str, arr: np.ndarray, tol: float) -> ConditionCheck:
    worst = float(np.min(arr)) if np.size(arr) else 0.0
    return ConditionCheck(label, worst >= -tol, worst)


def _nonpos(label: str, arr: np.ndarray, tol: float) -> ConditionCheck:
    worst = float(np.max(arr)) if np.size(arr) else 0.0
    return ConditionCheck(label, worst <= tol, worst)


def _sign_checks(m: Any, names: tuple[str, ...], tol: float) -> tuple[ConditionCheck, ...]:
    checks = [_nonneg(f"{n} >= 0", getattr(m, n), tol) for n in names]
    checks.append(_nonpos("Ddot <= 0", m.Ddot, tol))
    return tuple(checks)


def sign_certificate_implicit(m: ImplicitNDMethod, method: str | None = None,
                              tol: float = ENTRY_TOL) -> Certificate:
    """``Re, P, D >= 0`` and ``Ddot <= 0``: SSP for every positive time step."""
    checks = _sign_checks(m, ("Re", "P", "D"), tol)
    if all(c.passed for c in checks):
        return Certificate(method, "ND-implicit", Status.UNCONDITIONAL, math.inf, checks)
    return Certificate(method, "ND-implicit", Status.INFEASIBLE, 0.0, checks)


def _coefficient_certificate(m: Any, cls: str, names: tuple[str, ...], method: str | None,
                             tol: float) -> Certificate:
    checks = _sign_checks(m, names, tol)
    if all(c.passed for c in checks) and m.r > 0:
        return Certificate(method, cls, Status.CERTIFIED, float(m.r), checks)
    return Certificate(method, cls, Status.INFEASIBLE, 0.0, checks)


def sign_certificate_imex(m: ImexTDRK, method: str | None = None, tol: float = ENTRY_TOL) -> Certificate:
    """``Re, P, W, D >= 0`` and ``Ddot <= 0``: SSP for ``dt <= r dt_FE``."""
    return _coefficient_certificate(m, "IMEX", ("Re", "P", "W", "D"), method, tol)


def sign_certificate_glm(m: ImexTDGLM, method: str | None = None, tol: float = ENTRY_TOL) -> Certificate:
    """As :func:`sign_certificate_imex` plus ``R, Gamma, Q, V >= 0``.

    The conclusion bounds the new step by the maximum over the ``k`` previous
    steps.
    """
    return _coefficient_certificate(m, "IMEX-GLM", ("R", "P", "W", "D", "Gamma", "Q", "V"), method, tol)


# ---------------------------------------------------------------------------
# closed forms


def closed_form_C(family: str, K: float, variant: str = "optimal") -> float:
    """Closed-form SSP coefficient of an explicit SD family.

    ``TS``: ``K sqrt(2 + K^2) - K^2``.  ``2s4p``: smallest positive root of
    ``r^4 + 4K^2 r^3 - 12K^2 r^2 - 24K^4 r + 24K^4``.  ``2s3p``: smallest
    positive root of the cubic selected by ``variant`` (see
    :func:`tdssp.families.poly_2s3p`).  ``3s5p``: largest positive root of the
    coupled system.  Raises :class:`~tdssp.families.RootNotFoundError` when
    no positive root exists.
    """
    K = float(K)
    if not K > 0:
        raise ValueError(f"K must be positive, got {K!r}")
    key = family.upper()
    if key == "TS":
        return K * math.sqrt(2.0 + K * K) - K * K
    if key == "2S4P":
        return fam.positive_roots(fam.poly_2s4p(K))[0]
    if key == "2S3P":
        return fam.positive_roots(fam.poly_2s3p(K, variant))[0]
    if key == "3S5P":
        return fam.positive_roots(fam.coupled_3s5p(K))[-1]
    raise ValueError(f"unknown family {family!r}; use TS, 2s4p, 2s3p or 3s5p")


# ---------------------------------------------------------------------------
# registry dispatch


def certify(spec: Any, *, r_max: float = 100.0, cls: ConditionClass | None = None,
            param: float | None = None) -> Certificate:
    """Certificate for a :class:`~tdssp.registry.MethodSpec`.

    Explicit methods are certified under their own condition class and
    parameter unless ``cls`` / ``param`` override them; the non-SSP
    comparator defaults to SD with the registry's ``K``.
    """
    kind = spec.kind
    if kind == "explicit":
        from .registry import K_DEFAULT

        use_cls = cls or spec.condition_class or "SD"
        use_param = param if param is not None else (spec.param if spec.param is not None else K_DEFAULT)
        return certify_explicit(spec.method, use_cls, use_param, method=spec.name, r_max=r_max)
    if kind == "implicit-nd":
        return sign_certificate_implicit(spec.method, spec.name)
    if kind == "imex-rk":
        return sign_certificate_imex(spec.method, spec.name)
    if kind == "imex-glm":
        return sign_certificate_glm(spec.method, spec.name)
    raise ValueError(f"cannot certify method kind {kind!r}")
