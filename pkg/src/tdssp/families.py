"""Constructors for every two-derivative method shipped with the package.

Methods whose coefficients are fixed 15-digit decimals keep the original
decimal strings in ``meta["literals"]`` so the registry can export them without
any binary round-off.  Parametric families solve a scalar root problem for
their coefficient ``r`` first, then fill in the tableau from closed-form
expressions.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .tableaux import ButcherTD, ImexTDGLM, ImexTDRK, ImplicitNDMethod

__all__ = [
    "RootNotFoundError",
    "positive_roots",
    "explicit_taylor",
    "explicit_2s4p",
    "explicit_nonssp_2s3p",
    "explicit_2s3p",
    "explicit_3s5p",
    "ts_3s4p",
    "implicit_nd",
    "imex_rk",
    "imex_glm",
    "imex_glm_kstep_p2",
    "rk4_classical",
    "poly_2s3p",
    "poly_2s4p",
    "coupled_3s5p",
]


class RootNotFoundError(ValueError):
    """No admissible root of a family's defining equation was found."""


# ---------------------------------------------------------------------------
# root finding


def positive_roots(
    f: Callable[[float], float],
    r_max: float = 10.0,
    step: float = 1e-3,
    xtol: float = 1e-14,
) -> list[float]:
    """All sign changes of ``f`` on ``(0, r_max]`` located by a scan, then refined.

    The scan uses the grid ``step, 2*step, ..., r_max``; each bracketed sign
    change is polished with Brent's method.
    """
    n = int(round(r_max / step))
    grid = step * np.arange(1, n + 1)
    vals = np.array([f(float(x)) for x in grid])
    roots: list[float] = []
    for i in range(n):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif i + 1 < n and vals[i] * vals[i + 1] < 0.0:
            roots.append(float(brentq(f, grid[i], grid[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)))
    return roots


def _a0(K: float) -> float:
    return math.sqrt(K * K + 2.0) - K


def poly_2s3p(K: float, variant: str = "optimal") -> Callable[[float], float]:
    """Polynomial in ``r`` whose smallest positive root is the 2s3p coefficient.

    ``variant="optimal"`` is the cubic obtained from the three constraints that
    are active at the optimum:  ``(M^-1 e)_2 = 0``, ``(M^-1 e)_3 = 0`` and
    ``(M^-1 Sdot)_{3,1} = 0``.  ``variant="printed"`` is the legacy cubic
    ``2K(a0-2K) + 4K^3 a0 - a0 r + (1-a0)/(2K^2) r^2 - (a0/(2K)+K)/(6K^3) r^3``.
    Its root is not SSP-feasible for ``K = 1/sqrt(2)`` and it is kept only
    for comparison.
    """
    a0 = _a0(K)
    if variant == "optimal":
        c1 = 12.0 * K**4 * a0 * a0
        c2 = -3.0 * K * (4.0 * K * K * a0 - 2.0 * K + a0)
        c3 = 2.0 * K * K - K * a0 + 2.0
        return lambda r: c1 * (r - 1.0) + c2 * r * r + c3 * r**3
    if variant == "printed":
        c0 = 2.0 * K * (a0 - 2.0 * K) + 4.0 * K**3 * a0
        c2 = (1.0 - a0) / (2.0 * K * K)
        c3 = -(a0 / (2.0 * K) + K) / (6.0 * K**3)
        return lambda r: c0 - a0 * r + c2 * r * r + c3 * r**3
    raise ValueError(f"unknown 2s3p variant {variant!r}; use 'optimal' or 'printed'")


def poly_2s4p(K: float) -> Callable[[float], float]:
    """``r^4 + 4K^2 r^3 - 12K^2 r^2 - 24K^4 r + 24K^4``."""
    K2, K4 = K * K, K**4
    return lambda r: r**4 + 4 * K2 * r**3 - 12 * K2 * r * r - 24 * K4 * r + 24 * K4


def _a21_3s5p(r: float, K: float) -> float:
    return (K**6 / r**6) * (
        -2.0 / K**4 * r**5
        + 10.0 / K**4 * r**4
        + 40.0 / K**2 * r**3
        - 120.0 / K**2 * r**2
        - 240.0 * r
        + 240.0
    )


def coupled_3s5p(K: float) -> Callable[[float], float]:
    """Quartic in ``a21`` with ``a21`` itself eliminated as a function of ``r``."""

    def f(r: float) -> float:
        a = _a21_3s5p(r, K)
        K2 = K * K
        return (
            10.0 * r * r * a**4
            - (100.0 * K2 + 10.0 * r * r) * a**3
            + (130.0 * K2 + 3.0 * r * r) * a**2
            - 50.0 * K2 * a
            + 6.0 * K2
        )

    return f


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# explicit single-operator methods


def explicit_taylor() -> ButcherTD:
    """Second-order Taylor series method ``u + dt F + dt^2/2 Fdot``."""
    return ButcherTD([[0.0]], [[0.0]], [1.0], [0.5], meta={"family": "taylor"})


def explicit_2s4p() -> ButcherTD:
    """Two-stage fourth-order method; stage ``u + dt/2 F + dt^2/8 Fdot``."""
    return ButcherTD(
        [[0.0, 0.0], [0.5, 0.0]],
        [[0.0, 0.0], [1.0 / 8.0, 0.0]],
        [1.0, 0.0],
        [1.0 / 6.0, 2.0 / 6.0],
        meta={"family": "2s4p"},
    )


def explicit_nonssp_2s3p() -> ButcherTD:
    """Third-order two-stage comparator that is not SSP for any step size."""
    return ButcherTD(
        [[0.0, 0.0], [-1.0, 0.0]],
        [[0.0, 0.0], [0.5, 0.0]],
        [-1.0 / 3.0, 4.0 / 3.0],
        [4.0 / 3.0, 0.5],
        meta={"family": "2s3p-nonssp", "ssp": False},
    )


def rk4_classical() -> ButcherTD:
    """Classical fourth-order Runge--Kutta with ``Adot = 0`` (reduction check)."""
    A = np.zeros((4, 4))
    A[1, 0] = A[2, 1] = 0.5
    A[3, 2] = 1.0
    return ButcherTD(A, np.zeros((4, 4)), [1 / 6, 1 / 3, 1 / 3, 1 / 6], np.zeros(4),
                     meta={"family": "rk4"})


def explicit_2s3p(K: float, variant: str = "optimal", r_max: float = 10.0) -> ButcherTD:
    """Optimal two-stage third-order method for second-derivative constant ``K``.

    Every member of the family ``a, ahat = a^2/2, b2`` (with ``b1 = 1 - b2``,
    ``bhat1 = 1/2 - a b2/2 - 1/(6a)``, ``bhat2 = 1/(6a) - a b2/2``) is third
    order.  The optimal member has ``a = K a0 / r`` with
    ``a0 = sqrt(K^2+2) - K`` and ``r`` the smallest positive root of
    :func:`poly_2s3p`.

    ``meta`` records ``r``, both candidate roots and whether they disagree.
    """
    K = _check_positive("K", K)
    a0 = _a0(K)
    roots = {}
    for v in ("optimal", "printed"):
        found = positive_roots(poly_2s3p(K, v), r_max=r_max)
        roots[v] = found[0] if found else None
    r = roots.get(variant) if variant in roots else None
    if variant not in roots:
        poly_2s3p(K, variant)  # raises the unknown-variant error
    if r is None:
        raise RootNotFoundError(f"2s3p polynomial ({variant}) has no root in (0, {r_max}]")
    a = K * a0 / r
    if variant == "optimal":
        b2 = r * (K * a0 * r + 3 * K * a0 - 2 * r) / (12 * K**3 * (2 * K * K * a0 - 2 * K + a0))
    else:
        b2 = (2 * K * K * (1 - 1 / r) + r) / (K * a0 + 2 * K * K) - r * r / (3 * K * K)
    ahat = 0.5 * a * a
    bhat1 = 0.5 - 0.5 * a * b2 - 1.0 / (6.0 * a)
    bhat2 = 1.0 / (6.0 * a) - 0.5 * a * b2
    disagree = (
        roots["printed"] is None or roots["optimal"] is None
        or abs(roots["printed"] - roots["optimal"]) > 1e-6
    )
    return ButcherTD(
        [[0.0, 0.0], [a, 0.0]],
        [[0.0, 0.0], [ahat, 0.0]],
        [1.0 - b2, b2],
        [bhat1, bhat2],
        meta={
            "family": "2s3p",
            "K": K,
            "variant": variant,
            "a0": a0,
            "r": r,
            "root_optimal": roots["optimal"],
            "root_printed": roots["printed"],
            "roots_disagree": disagree,
        },
    )


def explicit_3s5p(K: float, r_max: float = 10.0) -> ButcherTD:
    """Three-stage fifth-order method for second-derivative constant ``K``.

    ``r`` is the largest positive root of the quartic in ``a21`` once ``a21``
    is replaced by its rational expression in ``r``; the remaining
    coefficients follow from ``a21`` alone.
    """
    K = _check_positive("K", K)
    roots = positive_roots(coupled_3s5p(K), r_max=r_max)
    if not roots:
        raise RootNotFoundError(f"3s5p system has no root in (0, {r_max}] for K={K}")
    r = roots[-1]
    a21 = _a21_3s5p(r, K)
    if a21 == 0.0 or abs(1.0 - 2.0 * a21) < 1e-14:
        raise ValueError(f"3s5p: a21={a21!r} makes a denominator vanish")
    a31 = (0.6 - a21) / (1.0 - 2.0 * a21)
    if abs(a31 - a21) < 1e-14 or a31 == 0.0:
        raise ValueError(f"3s5p: a31={a31!r} makes a denominator vanish")
    ad21 = 0.5 * a21 * a21
    t = 0.6 - a21
    ad32 = 0.1 * (t * t / (a21 * (1 - 2 * a21) ** 3) - t / (1 - 2 * a21) ** 2)
    ad31 = 0.5 * t * t / (1 - 2 * a21) ** 2 - ad32
    bd2 = (2 * a31 - 1) / (12 * a21 * (a31 - a21))
    bd3 = (1 - 2 * a21) / (12 * a31 * (a31 - a21))
    bd1 = 0.5 - bd2 - bd3
    return ButcherTD(
        [[0, 0, 0], [a21, 0, 0], [a31, 0, 0]],
        [[0, 0, 0], [ad21, 0, 0], [ad31, ad32, 0]],
        [1.0, 0.0, 0.0],
        [bd1, bd2, bd3],
        meta={"family": "3s5p", "K": K, "r": r, "a21": a21, "all_roots": tuple(roots)},
    )


def ts_3s4p(kappa: float) -> ButcherTD:
    """Three-stage fourth-order methods for the Taylor-series condition.

    For ``kappa >= 1`` the method has rational coefficients and coefficient 1;
    for ``kappa < 1`` the coefficients are rational functions of ``kappa``
    and the coefficient is ``2 kappa / (kappa + 1)``.  The first stage is a
    copy of ``u^n``.
    """
    k = _check_positive("kappa", kappa)
    if k >= 1.0:
        A = [[0, 0, 0], [1, 0, 0], [14 / 27, 4 / 27, 0]]
        Ad = [[0, 0, 0], [0.5, 0, 0], [2 / 27, 0, 0]]
        b = [17 / 48, 4 / 48, 27 / 48]
        bd = [1 / 24, 0, 0]
        branch = "kappa>=1"
    else:
        if abs(k - 3.0) < 1e-14:
            raise ValueError("ts_3s4p: kappa = 3 makes a denominator vanish")
        a21 = (k + 1) / 2
        ad21 = (k + 1) ** 2 / 8
        a31 = (k + 1) * (-k**3 - 2 * k**2 + 14 * k + 3) / (2 * (k + 2) ** 3)
        a32 = (k + 1) * (k - 3) ** 2 / (2 * (k + 2) ** 3)
        ad31 = k * (-k**2 + 2 * k + 3) ** 2 / (8 * (k + 2) ** 3)
        b1 = (3 * k**5 - 9 * k**4 - 22 * k**3 + 30 * k**2 + 21 * k + 11) / (
            3 * (k - 3) ** 2 * (k + 1) ** 3
        )
        b2 = 2 * k / (3 * (k + 1) ** 3)
        b3 = 2 * (k + 2) ** 3 / (3 * (k - 3) ** 2 * (k + 1) ** 3)
        bd1 = -(-3 * k**3 + 3 * k**2 + k + 1) / (6 * (k - 3) * (k + 1) ** 2)
        A = [[0, 0, 0], [a21, 0, 0], [a31, a32, 0]]
        Ad = [[0, 0, 0], [ad21, 0, 0], [ad31, 0, 0]]
        b = [b1, b2, b3]
        bd = [bd1, 0, 0]
        branch = "kappa<1"
    r = 1.0 if k >= 1.0 else 2 * k / (k + 1)
    return ButcherTD(A, Ad, b, bd, meta={"family": "ts-3s4p", "kappa": k, "branch": branch, "r": r})


# ---------------------------------------------------------------------------
# printed decimal coefficient sets


def _parse(text: str) -> tuple[np.ndarray, tuple]:
    """Parse rows separated by ``;`` of whitespace-separated decimal literals."""
    rows = [row.split() for row in text.strip().split(";")]
    if len(rows) == 1:
        lits = tuple(rows[0])
        return np.array([float(x) for x in lits]), lits
    lits2 = tuple(tuple(row) for row in rows)
    return np.array([[float(x) for x in row] for row in lits2]), lits2


def _from_literals(spec: dict[str, str]) -> tuple[dict[str, np.ndarray], dict[str, tuple]]:
    arrays, literals = {}, {}
    for key, text in spec.items():
        arrays[key], literals[key] = _parse(text)
    return arrays, literals


_ND4 = {
    "Re": "1 0 0 0.908233497673956 0",
    "P": """0 0 0 0 0;
            1 0 0 0 0;
            0.084036809261019 0.915963190738981 0 0 0;
            0.001511648458457 0 0.090254853867587 0 0;
            0 0 0 1 0""",
    "D": "0.660949255604937 0.242201390400848 1.137542996287740 0.191388711018110 0.625266691721946",
    "Ddot": "-0.177750705279127 -0.354733903778084 -0.403963513682271 -0.161628266349058 -0.218859021269943",
}


def implicit_nd(order: int) -> ImplicitNDMethod:
    """Unconditionally SSP implicit two-derivative methods of order 2, 3 or 4."""
    if order == 2:
        return ImplicitNDMethod([1.0], [[0.0]], [1.0], [-0.5], meta={"order": 2})
    if order == 3:
        return ImplicitNDMethod(
            [1.0, 0.0], [[0.0, 0.0], [1.0, 0.0]], [0.0, 1.0], [-1 / 6, -1 / 3], meta={"order": 3}
        )
    if order == 4:
        arr, lits = _from_literals(_ND4)
        return ImplicitNDMethod(arr["Re"], arr["P"], arr["D"], arr["Ddot"],
                                meta={"order": 4, "literals": lits})
    raise ValueError(f"implicit_nd: unsupported order {order!r}; available: 2, 3, 4")


_IMEX3 = {
    "Re": "1 0.688151680893388 0 0.583517183806433 0 0",
    "P": """0 0 0 0 0 0;
            0.253395246357353 0 0 0 0 0;
            0 0.235733481708505 0 0 0 0;
            0 0.123961833526104 0 0 0 0;
            0.409037644509411 0.136123556305509 0 0 0 0;
            0.203353399602184 0 0 0 0.331204417210324 0""",
    "W": """0 0 0 0 0 0;
            0.058453072749259 0 0 0 0 0;
            0.764266518291495 0 0 0 0 0;
            0 0 0.292520982667463 0 0 0;
            0.173788618990251 0 0 0.281050180194829 0 0;
            0.016811671845949 0 0 0.448630511341543 0 0""",
    "D": "0 2 0.388820513661584 0.083529464436389 1.793313488277995 0",
    "Ddot": "-0.871358934880525 -0.856842702601821 0 0 -2 -0.205134529930013",
    "r": "0.904402174130635",
}


def imex_rk(order: int) -> ImexTDRK:
    """IMEX two-derivative Runge--Kutta methods of order 2 (three stages) or 3 (six)."""
    if order == 2:
        W = np.zeros((3, 3))
        P = np.zeros((3, 3))
        W[1, 0] = 1.0
        P[2, 0] = 0.5
        W[2, 1] = 0.5
        return ImexTDRK([1.0, 0.0, 0.0], P, W, [0.5, 0.0, 0.5], [0.0, -0.5, 0.0], 1.0,
                        meta={"order": 2})
    if order == 3:
        arr, lits = _from_literals(_IMEX3)
        return ImexTDRK(arr["Re"], arr["P"], arr["W"], arr["D"], arr["Ddot"], float(arr["r"][0]),
                        meta={"order": 3, "literals": lits})
    raise ValueError(f"imex_rk: unsupported order {order!r}; available: 2, 3")


_GLM3 = {
    "R": """0 0 1;
            0.000000000013270 0.403826433558741 0.037615230472512;
            0 0.221598110956903 0;
            0 0.059380532720245 0;
            0 0 0""",
    "P": """0 0 0 0 0;
            0.452661697511965 0 0 0 0;
            0 0.032510664101898 0 0 0;
            0.235231740166619 0.000000000563127 0 0 0;
            0.536915718824635 0.013138165959401 0 0 0""",
    "W": """0 0 0 0 0;
            0.105896638443513 0 0 0 0;
            0.745891224941199 0 0 0 0;
            0 0 0.705387726550010 0 0;
            0.409669470298833 0 0.000000000119198 0.040276644797934 0""",
    "D": "0 21.332739593864588 0 0.652867317315466 14.945015954497144",
    "Ddot": "-6.7737812489230 -72.4600167654208 0 0 -161.5846694139845",
    "Gamma": "0 0 0",
    "Q": "0.289233938741249 0 0 0 0.041812814961867",
    "V": "0.274172259985154 0 0 0.394780986311730 0",
    "r": "1.080445742835932",
}


def _glm_1step_p2() -> ImexTDGLM:
    sq2 = math.sqrt(2.0)
    g = 1.0 / (2.0 + sq2)
    P = np.zeros((3, 3))
    W = np.zeros((3, 3))
    W[1, 0] = 1.0
    P[2, 0] = (6.0 - sq2) / 8.0
    W[2, 1] = (2.0 + sq2) / 8.0
    return ImexTDGLM(
        R=[[1.0], [0.0], [0.0]], P=P, W=W,
        D=[g, 0.0, 1.0 / sq2], Ddot=[-g, 0.0, 0.0],
        Gamma=[0.0], Q=[0.0, 0.0, 1.0 - sq2 / 4.0],
        V=[0.0, 0.0, (2.0 + sq2) / (4.0 * (1.0 + sq2))],
        r=(1.0 + sq2) / 2.0, meta={"order": 2},
    )


def _glm_2step_p2() -> ImexTDGLM:
    s29 = math.sqrt(29.0)
    cb = np.cbrt
    c23 = 2.0 ** (2.0 / 3.0)
    w32 = (cb(27 + 5 * s29) - cb(2.0)) / (2 * cb(5 + s29))
    d33 = 10.0 / 6.0 + c23 / 6.0 * (cb(9 * s29 + 43) - cb(9 * s29 - 43))
    r31 = 1 + 0.5 * cb(0.5 * (-5 + s29)) - 1 / (c23 * cb(-5 + s29))
    # 727 - 135 sqrt(29) cancels almost completely; use (727^2 - 135^2 * 29) = 4
    big = cb(727 + 135 * s29)
    q3 = 20.0 / 9.0 - c23 / 9.0 * (cb(4.0) / big + big)
    v2 = (7 - c23 * cb(81 * s29 + 137) + c23 * cb(81 * s29 - 137)) / 9.0
    v3 = c23 * (cb(5 + s29) - cb(s29 - 5)) - 2.0
    dd33 = -2.0 / (v3 + q3)
    r = (cb(0.5 * (61 + 9 * s29)) + cb(0.5 * (61 - 9 * s29)) - 1.0) / 3.0
    # Columns are ordered oldest first: column 0 multiplies u^{n-1}, column 1 u^n.
    R = [[0.0, 1.0], [0.0, 0.0], [r31, 0.0]]
    P = np.zeros((3, 3))
    W = np.zeros((3, 3))
    W[1, 0] = 1.0
    W[2, 1] = w32
    return ImexTDGLM(
        R=R, P=P, W=W, D=[0.0, 0.0, d33], Ddot=[0.0, 0.0, dd33],
        Gamma=[0.0, 0.0], Q=[0.0, 0.0, q3], V=[0.0, v2, v3], r=float(r),
        meta={"order": 2},
    )


def imex_glm_kstep_p2(k: int) -> ImexTDGLM:
    """``k``-step two-stage second-order family with coefficient ``(k-2)/(k-1)``."""
    if int(k) != k or k < 3:
        raise ValueError(f"imex_glm_kstep_p2 requires an integer k >= 3, got {k!r}")
    k = int(k)
    R = np.zeros((2, k))
    R[0, k - 1] = 1.0           # y1 starts from u^n
    R[1, 0] = 1.0 / (k - 1)     # y2 reaches back to u^{n-k+1}
    W = np.zeros((2, 2))
    W[1, 0] = (k - 2) / (k - 1)
    return ImexTDGLM(
        R=R, P=np.zeros((2, 2)), W=W,
        D=[0.0, float(k)], Ddot=[-(k - 1.0), -float(k)],
        Gamma=np.zeros(k), Q=[0.0, 1.0 / (k - 1)], V=[(k - 2) / (k - 1), 0.0],
        r=(k - 2) / (k - 1), meta={"order": 2, "k": k},
    )


def _glm_5stage_p3() -> ImexTDGLM:
    arr, lits = _from_literals(_GLM3)
    return ImexTDGLM(
        R=arr["R"], P=arr["P"], W=arr["W"], D=arr["D"], Ddot=arr["Ddot"],
        Gamma=arr["Gamma"], Q=arr["Q"], V=arr["V"], r=float(arr["r"][0]),
        meta={"order": 3, "literals": lits},
    )


_GLM_BUILDERS: dict[str, Callable[[], ImexTDGLM]] = {
    "1step-p2": _glm_1step_p2,
    "2step-p2": _glm_2step_p2,
    "2step-5stage-p3": _glm_5stage_p3,
    "2step-p3": _glm_5stage_p3,
}


def imex_glm(name: str, k: int | None = None) -> ImexTDGLM:
    """IMEX two-derivative GLMs by short name.

    Names: ``"1step-p2"``, ``"2step-p2"``, ``"kstep-p2"`` (needs ``k``),
    ``"2step-5stage-p3"`` (alias ``"2step-p3"``).  A leading ``"imex-glm-"``
    is accepted and stripped.
    """
    key = name.removeprefix("imex-glm-")
    if key == "kstep-p2":
        if k is None:
            raise ValueError("imex_glm('kstep-p2') needs the step count k")
        return imex_glm_kstep_p2(k)
    try:
        return _GLM_BUILDERS[key]()
    except KeyError:
        known = ", ".join(sorted([*_GLM_BUILDERS, "kstep-p2"]))
        raise ValueError(f"unknown GLM {name!r}; available: {known}") from None
