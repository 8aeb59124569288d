"""Named catalogue of all shipped methods.

The registry is a constant table of builder functions; :func:`lookup` returns
a fresh immutable :class:`MethodSpec` each time, so there is no shared mutable
state.  Identifiers are stable strings used by the CLI and the tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Literal, Union

import numpy as np

from . import families as fam
from .tableaux import ButcherTD, ImexTDGLM, ImexTDRK, ImplicitNDMethod

__all__ = [
    "MethodSpec",
    "UnknownMethodError",
    "K_DEFAULT",
    "KAPPA_DEFAULT",
    "lookup",
    "method_names",
    "aliases",
    "export_method",
    "export_registry",
]

Kind = Literal["explicit", "implicit-nd", "imex-rk", "imex-glm"]
Method = Union[ButcherTD, ImplicitNDMethod, ImexTDRK, ImexTDGLM]

#: Second-derivative constant of the centered stencil used with upwind advection.
K_DEFAULT = 1.0 / math.sqrt(2.0)
#: Taylor-series constant of the squared-upwind stencil.
KAPPA_DEFAULT = 1.0

CLOSED_FORM_TOL = 1e-12
PRINTED_TOL = 1e-8


class UnknownMethodError(KeyError):
    """Raised by :func:`lookup` for identifiers that are not in the registry."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0])


@dataclass(frozen=True, eq=False)
class MethodSpec:
    """A registry entry: coefficients plus the facts needed to test them.

    ``condition_class`` names the base conditions under which the method is
    certified (``"SD"``, ``"TS"``, ``"ND-implicit"``, ``"IMEX"``,
    ``"IMEX-GLM"``) and is ``None`` for the non-SSP comparator.  ``param`` is
    ``K`` for SD methods and ``kappa`` for TS methods.
    """

    name: str
    kind: Kind
    method: Method
    order: int
    condition_class: str | None
    param: float | None
    ssp_coefficient: float | None
    coefficient_source: Literal["closed-form", "printed-decimal"]
    description: str
    ssp: bool = True

    @property
    def tol(self) -> float:
        """Residual tolerance appropriate to how the coefficients were given."""
        return PRINTED_TOL if self.coefficient_source == "printed-decimal" else CLOSED_FORM_TOL

    @property
    def s(self) -> int:
        return self.method.s

    @property
    def k(self) -> int:
        return self.method.k if isinstance(self.method, ImexTDGLM) else 1


def _sd(name, builder, order, printed, desc, *, parametric=False, ssp=True):
    def make(K: float | None = None, **_: Any) -> MethodSpec:
        K = K_DEFAULT if K is None else float(K)
        m = builder(K) if parametric else builder()
        return MethodSpec(name, "explicit", m, order, "SD" if ssp else None, K if ssp else None,
                          printed, "closed-form", desc, ssp)
    return make


def _td_2s3p(K: float | None = None, **_: Any) -> MethodSpec:
    K = K_DEFAULT if K is None else float(K)
    m = fam.explicit_2s3p(K)
    return MethodSpec("td-2s3p", "explicit", m, 3, "SD", K, 1.04, "closed-form",
                      "two-stage third-order optimal SD method")


def _ts_3s4p(kappa: float | None = None, **_: Any) -> MethodSpec:
    kappa = KAPPA_DEFAULT if kappa is None else float(kappa)
    m = fam.ts_3s4p(kappa)
    return MethodSpec("ts-3s4p", "explicit", m, 4, "TS", kappa, m.meta["r"], "closed-form",
                      "three-stage fourth-order optimal Taylor-series-condition method")


def _nd(order: int) -> Callable[..., MethodSpec]:
    def make(**_: Any) -> MethodSpec:
        m = fam.implicit_nd(order)
        source = "printed-decimal" if order == 4 else "closed-form"
        return MethodSpec(f"nd-implicit-p{order}", "implicit-nd", m, order, "ND-implicit", None,
                          None, source, f"unconditionally SSP implicit method of order {order}")
    return make


def _imex(order: int) -> Callable[..., MethodSpec]:
    def make(**_: Any) -> MethodSpec:
        m = fam.imex_rk(order)
        source = "printed-decimal" if order == 3 else "closed-form"
        return MethodSpec(f"imex-rk-p{order}", "imex-rk", m, order, "IMEX", None, m.r, source,
                          f"IMEX two-derivative Runge-Kutta method of order {order}")
    return make


def _glm(name: str, short: str, order: int, source: str, desc: str) -> Callable[..., MethodSpec]:
    def make(k: int | None = None, **_: Any) -> MethodSpec:
        if short == "kstep-p2":
            m = fam.imex_glm_kstep_p2(3 if k is None else k)
        else:
            m = fam.imex_glm(short)
        return MethodSpec(name, "imex-glm", m, order, "IMEX-GLM", None, m.r, source, desc)
    return make


_TABLE: dict[str, Callable[..., MethodSpec]] = {
    "td-ts": _sd("td-ts", fam.explicit_taylor, 2, 0.6180,
                 "one-stage second-order Taylor series method"),
    "td-2s3p": _td_2s3p,
    "td-2s4p": _sd("td-2s4p", fam.explicit_2s4p, 4, 0.6788,
                   "two-stage fourth-order method"),
    "td-3s5p": _sd("td-3s5p", fam.explicit_3s5p, 5, 0.6746,
                   "three-stage fifth-order optimal SD method", parametric=True),
    "ts-3s4p": _ts_3s4p,
    "nd-implicit-p2": _nd(2),
    "nd-implicit-p3": _nd(3),
    "nd-implicit-p4": _nd(4),
    "imex-rk-p2": _imex(2),
    "imex-rk-p3": _imex(3),
    "imex-glm-1step-p2": _glm("imex-glm-1step-p2", "1step-p2", 2, "closed-form",
                              "one-step three-stage second-order IMEX GLM"),
    "imex-glm-2step-p2": _glm("imex-glm-2step-p2", "2step-p2", 2, "closed-form",
                              "two-step three-stage second-order IMEX GLM"),
    "imex-glm-kstep-p2": _glm("imex-glm-kstep-p2", "kstep-p2", 2, "closed-form",
                              "k-step two-stage second-order IMEX GLM family (default k=3)"),
    "imex-glm-2step-5stage-p3": _glm("imex-glm-2step-5stage-p3", "2step-5stage-p3", 3,
                                     "printed-decimal", "five-stage third-order IMEX GLM"),
    "td-2s3p-nonssp": _sd("td-2s3p-nonssp", fam.explicit_nonssp_2s3p, 3, None,
                          "two-stage third-order comparator without the SSP property", ssp=False),
}

_ALIASES = {"imex-glm-2step-p3": "imex-glm-2step-5stage-p3"}


def method_names() -> list[str]:
    """Registry identifiers in catalogue order (aliases excluded)."""
    return list(_TABLE)


def aliases() -> dict[str, str]:
    return dict(_ALIASES)


def lookup(name: str, *, K: float | None = None, kappa: float | None = None,
           k: int | None = None) -> MethodSpec:
    """Return the registry entry ``name``.

    ``K`` re-parametrises the SD families (``td-2s3p``, ``td-3s5p``; for
    ``td-ts`` and ``td-2s4p`` it only changes the certification constant),
    ``kappa`` the ``ts-3s4p`` family and ``k`` the ``imex-glm-kstep-p2``
    family.
    """
    key = _ALIASES.get(name, name)
    try:
        builder = _TABLE[key]
    except KeyError:
        raise UnknownMethodError(
            f"unknown method {name!r}; available: {', '.join([*_TABLE, *_ALIASES])}"
        ) from None
    return builder(K=K, kappa=kappa, k=k)


# ---------------------------------------------------------------------------
# JSON export

_FIELDS = {
    "explicit": ("A", "Adot", "b", "bdot"),
    "implicit-nd": ("Re", "P", "D", "Ddot"),
    "imex-rk": ("Re", "P", "W", "D", "Ddot"),
    "imex-glm": ("R", "P", "W", "D", "Ddot", "Gamma", "Q", "V"),
}


def _decimal_strings(arr: np.ndarray) -> Any:
    if arr.ndim == 1:
        return [repr(float(x)) for x in arr]
    return [[repr(float(x)) for x in row] for row in arr]


def _as_lists(lits: Any) -> Any:
    if isinstance(lits, tuple):
        return [_as_lists(x) for x in lits]
    return lits


def export_method(spec: MethodSpec) -> dict[str, Any]:
    """JSON-ready description of a method with matrices as decimal strings.

    Printed 15-digit coefficients are emitted exactly as written; computed
    coefficients use the shortest decimal that round-trips to the stored
    double.
    """
    m = spec.method
    literals = m.meta.get("literals", {}) if hasattr(m, "meta") else {}
    matrices = {}
    for field in _FIELDS[spec.kind]:
        if field in literals:
            matrices[field] = _as_lists(literals[field])
        else:
            matrices[field] = _decimal_strings(np.asarray(getattr(m, field)))
    doc: dict[str, Any] = {
        "name": spec.name,
        "class": spec.kind,
        "k": spec.k,
        "s": spec.s,
        "order": spec.order,
        "condition_class": spec.condition_class,
        "param": spec.param,
        "coefficient_source": spec.coefficient_source,
        "description": spec.description,
        "matrices": matrices,
    }
    if spec.ssp_coefficient is not None:
        doc["ssp_coefficient"] = spec.ssp_coefficient
    if hasattr(m, "r"):
        doc["r"] = literals["r"][0] if "r" in literals else repr(float(m.r))
    meta = {key: val for key, val in getattr(m, "meta", {}).items() if key != "literals"}
    if meta:
        doc["meta"] = {key: (list(val) if isinstance(val, tuple) else val) for key, val in meta.items()}
    return doc


def export_registry() -> str:
    """The whole catalogue as a JSON array (aliases listed separately)."""
    entries = [export_method(lookup(name)) for name in _TABLE]
    return json.dumps({"methods": entries, "aliases": _ALIASES}, indent=2)
