"""Order-condition residuals for two-derivative Runge--Kutta, IMEX and GLM methods.

Three condition sets are provided:

* :func:`mdrk_residuals` -- single-operator methods in Butcher form, orders
  1 to 6 (1, 1, 2, 4, 9, 20 conditions).
* :func:`imex_mdrk_residuals` -- IMEX Runge--Kutta methods in Butcher form,
  orders 1 to 3 (2, 4, 14 conditions).
* :func:`imex_glm_residuals` -- IMEX general linear methods, orders 1 to 3
  (2, 4, 14 conditions).

Labels are stable strings ``"<set>.p<order>.<index>"``, for example
``"A.p4.3"``.  Each residual is ``|LHS - RHS|``.

The IMEX sets assume ``Fdot_im = F_im' F_im``: the second-derivative term of
the implicit operator only sees implicit subtrees.  The model problems in
:mod:`tdssp.problems` respect this identity.

Notes on the single-operator set
--------------------------------
``A.p5.4`` contains the term ``bdot^T A cdot``.  The order-six block is
complete: ``A.p6.1`` to ``A.p6.16`` follow the customary listing (with its
typographical slips repaired, see the inline comments) and ``A.p6.17`` to
``A.p6.20`` cover the four remaining rooted trees, so that satisfying every
order-six condition really means order six.  All conditions are checked
against an independent rooted-tree expansion in the test-suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .tableaux import ButcherGLM, ButcherIMEX, ButcherTD, nd_to_butcher, to_butcher_glm, to_butcher_imex

__all__ = [
    "OrderReport",
    "OrderRangeError",
    "CONDITION_COUNTS",
    "MAX_ORDER",
    "mdrk_residuals",
    "imex_mdrk_residuals",
    "imex_glm_residuals",
    "condition_set",
    "check_order",
    "labels",
]

CONDITION_COUNTS = {
    "A": {1: 1, 2: 1, 3: 2, 4: 4, 5: 9, 6: 20},
    "B": {1: 2, 2: 4, 3: 14},
    "C": {1: 2, 2: 4, 3: 14},
}
MAX_ORDER = {"A": 6, "B": 3, "C": 3}

Terms = list[tuple[str, float, float]]


class OrderRangeError(ValueError):
    """Requested order outside the range covered by a condition set."""


@dataclass(frozen=True)
class OrderReport:
    """Residuals of every condition up to ``order_requested``."""

    order_requested: int
    residuals: tuple[tuple[str, float], ...]
    tol: float = 1e-12
    method: str | None = None
    appendix: str = "A"
    max_abs_residual: float = field(init=False)

    def __post_init__(self) -> None:
        worst = max((abs(v) for _, v in self.residuals), default=0.0)
        object.__setattr__(self, "max_abs_residual", float(worst))

    @property
    def satisfied(self) -> bool:
        return self.max_abs_residual <= self.tol

    def by_order(self, p: int) -> dict[str, float]:
        """Residuals of the conditions belonging to order ``p`` only."""
        tag = f".p{p}."
        return {label: v for label, v in self.residuals if tag in label}

    def with_tol(self, tol: float) -> "OrderReport":
        return OrderReport(self.order_requested, self.residuals, tol, self.method, self.appendix)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "appendix": self.appendix,
            "p": self.order_requested,
            "tol": self.tol,
            "residuals": [{"label": label, "value": value} for label, value in self.residuals],
            "max_abs_residual": self.max_abs_residual,
            "satisfied": self.satisfied,
        }

    def to_json(self, **kwargs: Any) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _report(terms: Terms, p: int, tol: float, method: str | None, appendix: str) -> OrderReport:
    out = []
    for label, lhs, rhs in terms:
        q = int(label.split(".")[1][1:])
        if q <= p:
            out.append((label, float(abs(lhs - rhs))))
    return OrderReport(p, tuple(out), tol, method, appendix)


def _check_range(p: int, appendix: str) -> None:
    if not (isinstance(p, (int, np.integer)) and 1 <= p <= MAX_ORDER[appendix]):
        raise OrderRangeError(
            f"order {p!r} outside 1..{MAX_ORDER[appendix]} for condition set {appendix}"
        )


# ---------------------------------------------------------------------------
# single-operator two-derivative Runge--Kutta


def _terms_A(A: np.ndarray, Ad: np.ndarray, b: np.ndarray, bd: np.ndarray, p: int) -> Terms:
    e = np.ones(len(b))
    c = A @ e
    cd = Ad @ e

    def M(x: np.ndarray) -> np.ndarray:
        return A @ x

    def D(x: np.ndarray) -> np.ndarray:
        return Ad @ x

    c2, c3, c4, c5 = c**2, c**3, c**4, c**5
    Ac, Acd, Adc = M(c), M(cd), D(c)
    T: Terms = [
        ("A.p1.1", b @ e, 1.0),
        ("A.p2.1", b @ c + bd @ e, 1 / 2),
        ("A.p3.1", b @ c2 + 2 * bd @ c, 1 / 3),
        ("A.p3.2", b @ Ac + b @ cd + bd @ c, 1 / 6),
    ]
    if p < 4:
        return T
    A2c = M(Ac)
    Ac2 = M(c2)
    T += [
        ("A.p4.1", b @ c3 + 3 * bd @ c2, 1 / 4),
        ("A.p4.2", b @ (c * Ac) + b @ (c * cd) + bd @ c2 + bd @ Ac + bd @ cd, 1 / 8),
        ("A.p4.3", b @ Ac2 + 2 * b @ Adc + bd @ c2, 1 / 12),
        ("A.p4.4", b @ A2c + b @ Acd + b @ Adc + bd @ Ac + bd @ cd, 1 / 24),
    ]
    if p < 5:
        return T
    cAc, ccd = c * Ac, c * cd
    T += [
        ("A.p5.1", b @ c4 + 4 * bd @ c3, 1 / 5),
        ("A.p5.2", b @ (c2 * Ac) + b @ (c2 * cd) + bd @ c3 + 2 * bd @ cAc + 2 * bd @ ccd, 1 / 10),
        ("A.p5.3", b @ (c * Ac2) + 2 * b @ (c * Adc) + bd @ c3 + bd @ Ac2 + 2 * bd @ Adc, 1 / 15),
        # the eighth term is bdot^T A cdot (written as bdot^T A c in some listings)
        ("A.p5.4", b @ (c * A2c) + b @ (c * Acd) + b @ (c * Adc) + bd @ cAc + bd @ ccd
         + bd @ A2c + bd @ Acd + bd @ Adc, 1 / 30),
        ("A.p5.5", b @ (Ac * Ac) + 2 * b @ (cd * Ac) + b @ cd**2 + 2 * bd @ cAc + 2 * bd @ ccd, 1 / 20),
        ("A.p5.6", b @ M(c3) + 3 * b @ D(c2) + bd @ c3, 1 / 20),
        ("A.p5.7", b @ M(cAc) + b @ M(ccd) + b @ D(c2) + b @ D(Ac) + b @ D(cd) + bd @ cAc + bd @ ccd,
         1 / 40),
        ("A.p5.8", b @ M(Ac2) + 2 * b @ M(Adc) + b @ D(c2) + bd @ Ac2 + 2 * bd @ Adc, 1 / 60),
        ("A.p5.9", b @ M(A2c) + b @ M(Acd) + b @ M(Adc) + b @ D(Ac) + b @ D(cd) + bd @ A2c
         + bd @ Acd + bd @ Adc, 1 / 120),
    ]
    if p < 6:
        return T
    A3c = M(A2c)
    A2cd = M(Acd)
    AAdc = M(Adc)
    AdAc = D(Ac)
    Adcd = D(cd)
    AdAdc = D(Adc)
    Adc2 = D(c2)
    Adc3 = D(c3)
    A2c2 = M(Ac2)
    T += [
        ("A.p6.1", b @ c5 + 5 * bd @ c4, 1 / 6),
        ("A.p6.2", b @ (c3 * Ac) + 3 * bd @ (c2 * Ac) + bd @ c4 + b @ (c3 * cd) + 3 * bd @ (c2 * cd),
         1 / 12),
        ("A.p6.3", b @ (c2 * Ac2) + 2 * bd @ (c * Ac2) + 2 * b @ (c2 * Adc) + bd @ c4
         + 4 * bd @ (c * Adc), 1 / 18),
        ("A.p6.4", b @ (c * M(c3)) + 3 * b @ (c * Adc2) + bd @ M(c3) + 3 * bd @ Adc2 + bd @ c4,
         1 / 24),
        ("A.p6.5", b @ M(c4) + 4 * b @ Adc3 + bd @ c4, 1 / 30),
        # dangling "+ bdot^T" read as bdot^T (c^2 . A c); 2 bdot^T (c . A cdot) restored
        ("A.p6.6", b @ (c2 * A2c) + 2 * bd @ (c * A2c) + b @ (c2 * Acd) + b @ (c2 * Adc)
         + bd @ (c2 * Ac) + 2 * bd @ (c * Adc) + bd @ (c2 * cd) + 2 * bd @ (c * Acd), 1 / 36),
        # first two terms use A^2 (not Adot^2)
        ("A.p6.7", b @ (c * A2c2) + bd @ A2c2 + bd @ (c * Ac2) + b @ (c * Adc2) + 2 * b @ (c * AAdc)
         + bd @ Adc2 + 2 * bd @ AAdc + 2 * bd @ (c * Adc), 1 / 72),
        ("A.p6.8", b @ M(M(c3)) + bd @ M(c3) + b @ Adc3 + 3 * b @ M(Adc2) + 3 * bd @ Adc2, 1 / 120),
        # "c . Ac . Ac" read as c . A(c . Ac); "bdot^T (Ac . Ac)" read as bdot^T A (c . Ac)
        ("A.p6.9", b @ (c * M(cAc)) + bd @ M(cAc) + b @ (c * AdAc) + b @ (c * M(ccd))
         + bd @ (c2 * Ac) + b @ (c * Adc2) + bd @ AdAc + bd @ M(ccd) + b @ (c * Adcd) + bd @ Adc2
         + bd @ (c2 * cd) + bd @ Adcd, 1 / 48),
        # "X c . Y" read as X (c . Y) throughout the next rows
        ("A.p6.10", b @ M(c2 * Ac) + b @ M(c2 * cd) + bd @ (c2 * Ac) + 2 * b @ D(cAc) + b @ Adc3
         + 2 * b @ D(ccd) + bd @ (c2 * cd), 1 / 60),
        ("A.p6.11", b @ M(c * Ac2) + bd @ (c * Ac2) + b @ D(Ac2) + b @ Adc3 + 2 * b @ M(c * Adc)
         + 2 * b @ AdAdc + 2 * bd @ (c * Adc), 1 / 90),
        ("A.p6.12", b @ (c * A3c) + bd @ A3c + bd @ (c * A2c) + b @ (c * AdAc) + b @ (c * AAdc)
         + b @ (c * A2cd) + bd @ AdAc + bd @ AAdc + bd @ A2cd + b @ (c * Adcd) + bd @ (c * Acd)
         + bd @ (c * Adc) + bd @ Adcd, 1 / 144),
        ("A.p6.13", b @ M(c * A2c) + b @ M(c * Acd) + b @ M(c * Adc) + b @ D(cAc) + b @ D(A2c)
         + bd @ (c * A2c) + b @ D(ccd) + b @ D(Acd) + bd @ (c * Acd) + b @ AdAdc + bd @ (c * Adc),
         1 / 180),
        ("A.p6.14", b @ M(M(cAc)) + b @ M(M(ccd)) + b @ M(Adc2) + b @ M(AdAc) + b @ D(cAc)
         + bd @ M(cAc) + b @ M(Adcd) + b @ D(ccd) + bd @ M(ccd) + bd @ Adc2 + bd @ AdAc + bd @ Adcd,
         1 / 240),
        ("A.p6.15", b @ M(A2c2) + bd @ A2c2 + b @ D(Ac2) + b @ M(Adc2) + 2 * b @ M(AAdc) + bd @ Adc2
         + 2 * bd @ AAdc + 2 * b @ AdAdc, 1 / 360),
        ("A.p6.16", b @ (c * Ac * Ac) + bd @ (Ac * Ac) + 2 * b @ (c * cd * Ac) + 2 * bd @ (c2 * Ac)
         + 2 * bd @ (cd * Ac) + 2 * bd @ (c2 * cd) + b @ (c * cd**2) + bd @ cd**2, 1 / 24),
        # the four trees not covered by the rows above
        ("A.p6.17", b @ (Ac2 * cd) + b @ (Ac2 * Ac) + 2 * b @ (Ac * Adc) + 2 * b @ (Adc * cd)
         + bd @ (Ac2 * c) + bd @ (Ac * c2) + bd @ (c2 * cd) + 2 * bd @ (c * Adc), 1 / 36),
        ("A.p6.18", b @ (A2c * cd) + b @ (A2c * Ac) + b @ (Ac * Acd) + b @ (Ac * Adc) + b @ (Acd * cd)
         + b @ (Adc * cd) + bd @ (Ac * Ac) + 2 * bd @ (Ac * cd) + bd @ (A2c * c) + bd @ (Acd * c)
         + bd @ (c * Adc) + bd @ cd**2, 1 / 72),
        ("A.p6.19", b @ M(Ac * Ac) + 2 * b @ M(Ac * cd) + b @ M(cd**2) + 2 * b @ D(cAc) + 2 * b @ D(ccd)
         + bd @ (Ac * Ac) + 2 * bd @ (Ac * cd) + bd @ cd**2, 1 / 120),
        ("A.p6.20", b @ M(A3c) + b @ M(A2cd) + b @ M(AAdc) + b @ M(AdAc) + b @ M(Adcd) + b @ D(A2c)
         + b @ D(Acd) + b @ AdAdc + bd @ A3c + bd @ A2cd + bd @ AAdc + bd @ AdAc + bd @ Adcd,
         1 / 720),
    ]
    return T


def mdrk_residuals(m: ButcherTD, p: int, tol: float = 1e-12, method: str | None = None) -> OrderReport:
    """Single-operator two-derivative conditions of every order up to ``p`` (1..6)."""
    _check_range(p, "A")
    return _report(_terms_A(m.A, m.Adot, m.b, m.bdot, p), p, tol, method, "A")


# ---------------------------------------------------------------------------
# IMEX Runge--Kutta


def _terms_B(m: ButcherIMEX) -> Terms:
    A, Ah, b, bh, bd = m.A, m.Ahat, m.b, m.bhat, m.bdot
    e = np.ones(m.s)
    c, ch, cd = m.c, m.chat, m.cdot
    # each order block: left column top to bottom, then right column
    left = {
        1: [(b @ e, 1.0)],
        2: [(b @ c + bd @ e, 1 / 2), (bh @ c, 1 / 2)],
        3: [
            (b @ A @ c + bd @ c + b @ cd, 1 / 6),
            (b @ Ah @ c, 1 / 6),
            (bh @ A @ c + bh @ cd, 1 / 6),
            (bh @ Ah @ c, 1 / 6),
            (b @ (c * c) + 2 * bd @ c, 1 / 3),
            (b @ (ch * ch), 1 / 3),
            (bh @ (c * ch), 1 / 3),
        ],
    }
    right = {
        1: [(bh @ e, 1.0)],
        2: [(b @ ch, 1 / 2), (bh @ ch, 1 / 2)],
        3: [
            (b @ A @ ch + bd @ ch, 1 / 6),
            (b @ Ah @ ch, 1 / 6),
            (bh @ A @ ch, 1 / 6),
            (bh @ Ah @ ch, 1 / 6),
            (b @ (c * ch) + bd @ ch, 1 / 3),
            (bh @ (c * c), 1 / 3),
            (bh @ (ch * ch), 1 / 3),
        ],
    }
    T: Terms = []
    for q in (1, 2, 3):
        for i, (lhs, rhs) in enumerate(left[q] + right[q], start=1):
            T.append((f"B.p{q}.{i}", lhs, rhs))
    return T


def imex_mdrk_residuals(m: ButcherIMEX, p: int, tol: float = 1e-12,
                        method: str | None = None) -> OrderReport:
    """IMEX two-derivative Runge--Kutta conditions of every order up to ``p`` (1..3)."""
    _check_range(p, "B")
    return _report(_terms_B(m), p, tol, method, "B")


# ---------------------------------------------------------------------------
# IMEX general linear methods


def _terms_C(m: ButcherGLM) -> Terms:
    T_, Ah, A, Ad = m.T, m.Ahat, m.A, m.Adot
    th, bh, b, bd = m.theta, m.bhat, m.b, m.bdot
    l = m.ell
    e = np.ones(m.s)
    Xh = T_ @ l + Ah @ e      # explicit-rooted first-order stage weights
    X = T_ @ l + A @ e        # implicit-rooted first-order stage weights
    h2 = th @ l**2 / 2
    h6 = th @ l**3 / 6
    h3 = th @ l**3 / 3
    Tl2 = T_ @ l**2 / 2
    rows = [
        (1, th @ l + bh @ e, 1.0),
        (1, th @ l + b @ e, 1.0),
        (2, h2 + bh @ Xh, 1 / 2),
        (2, h2 + bh @ X, 1 / 2),
        (2, h2 + b @ Xh, 1 / 2),
        (2, h2 + b @ X + bd @ e, 1 / 2),
        (3, h6 + bh @ (Tl2 + Ah @ Xh), 1 / 6),
        (3, h6 + bh @ (Tl2 + Ah @ X), 1 / 6),
        (3, h6 + bh @ (Tl2 + A @ Xh), 1 / 6),
        (3, h6 + bh @ (Tl2 + A @ X + Ad @ e), 1 / 6),
        (3, h6 + b @ (Tl2 + Ah @ Xh), 1 / 6),
        (3, h6 + b @ (Tl2 + Ah @ X), 1 / 6),
        (3, h6 + b @ (Tl2 + A @ Xh) + bd @ Xh, 1 / 6),
        (3, h6 + b @ (Tl2 + A @ X + Ad @ e) + bd @ X, 1 / 6),
        (3, h3 + bh @ (Xh * Xh), 1 / 3),
        (3, h3 + bh @ (Xh * X), 1 / 3),
        (3, h3 + bh @ (X * X), 1 / 3),
        (3, h3 + b @ (Xh * Xh), 1 / 3),
        (3, h3 + b @ (X * Xh) + bd @ Xh, 1 / 3),
        (3, h3 + b @ (X * X) + 2 * bd @ X, 1 / 3),
    ]
    T: Terms = []
    count = {1: 0, 2: 0, 3: 0}
    for q, lhs, rhs in rows:
        count[q] += 1
        T.append((f"C.p{q}.{count[q]}", lhs, rhs))
    return T


def imex_glm_residuals(m: ButcherGLM, p: int, tol: float = 1e-12,
                       method: str | None = None) -> OrderReport:
    """IMEX two-derivative GLM conditions of every order up to ``p`` (1..3)."""
    _check_range(p, "C")
    return _report(_terms_C(m), p, tol, method, "C")


# ---------------------------------------------------------------------------
# dispatch over registry entries


def condition_set(kind: str) -> str:
    """Which condition set applies to a method kind from the registry."""
    return {"explicit": "A", "implicit-nd": "A", "imex-rk": "B", "imex-glm": "C"}[kind]


def check_order(spec: Any, p: int, tol: float | None = None) -> OrderReport:
    """Evaluate the appropriate condition set for a :class:`~tdssp.registry.MethodSpec`."""
    tol = spec.tol if tol is None else tol
    kind = spec.kind
    if kind == "explicit":
        return mdrk_residuals(spec.method, p, tol, spec.name)
    if kind == "implicit-nd":
        return mdrk_residuals(nd_to_butcher(spec.method), p, tol, spec.name)
    if kind == "imex-rk":
        return imex_mdrk_residuals(to_butcher_imex(spec.method), p, tol, spec.name)
    if kind == "imex-glm":
        return imex_glm_residuals(to_butcher_glm(spec.method), p, tol, spec.name)
    raise ValueError(f"no order conditions for method kind {kind!r}")


def labels(appendix: str, p: int) -> list[str]:
    """Labels of all conditions of exactly order ``p`` in a condition set."""
    return [f"{appendix}.p{p}.{i}" for i in range(1, CONDITION_COUNTS[appendix][p] + 1)]
