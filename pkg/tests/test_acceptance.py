"""Acceptance criteria.

Each criterion is a function returning ``(passed, detail)``.  Under pytest
every criterion prints one ``PASS``/``FAIL`` line (visible even without
``-s``) and then asserts.  Running this file directly prints the nine lines
without pytest::

    python tests/test_acceptance.py
"""

from __future__ import annotations

import functools
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import linear_step_matrix  # noqa: E402
from tdssp import families as fam  # noqa: E402
from tdssp.integrators import CallableSystem, integrate, observed_orders, step_explicit  # noqa: E402
from tdssp.order_conditions import check_order, mdrk_residuals  # noqa: E402
from tdssp.problems import RelaxationProblem, RiccatiProblem  # noqa: E402
from tdssp.registry import K_DEFAULT, lookup, method_names  # noqa: E402
from tdssp.ssp_certify import Status, certify, closed_form_C, max_r  # noqa: E402
from tdssp.sweep import tv_sweep  # noqa: E402
from tdssp.tableaux import ButcherTD, so_pair_from_butcher  # noqa: E402

EXPLICIT_SSP = ["td-ts", "td-2s3p", "td-2s4p", "td-3s5p", "ts-3s4p"]
IMEX = ["imex-rk-p2", "imex-rk-p3", "imex-glm-1step-p2", "imex-glm-2step-p2", "imex-glm-kstep-p2",
        "imex-glm-2step-5stage-p3"]
GLM = [n for n in IMEX if "glm" in n]
TV_TARGETS = {"td-ts": (0.6180, 0.001), "td-2s3p": (1.0400, 0.01), "td-2s4p": (0.7320, 0.005),
              "td-3s5p": (0.7136, 0.005)}
TV_TOL = 1e-12


@functools.lru_cache(maxsize=None)
def _sweep(name: str):
    return tv_sweep(name)


def _relaxation_ics(m: int):
    rng = np.random.default_rng(1)
    p = RelaxationProblem(m=m)
    return {"step": p.initial("step"),
            "random": np.concatenate([np.sign(rng.normal(size=m)), rng.normal(size=m)])}


# ---------------------------------------------------------------------------
# criteria


def criterion_1():
    parts, ok = [], True
    for name, (target, tol) in TV_TARGETS.items():
        lam = _sweep(name).lambda_obs
        ok &= abs(lam - target) <= tol
        parts.append(f"{name} {lam:.4f} (target {target:.4f})")
    bad = _sweep("td-2s3p-nonssp")
    ok &= bad.rises_everywhere
    parts.append(f"td-2s3p-nonssp rises everywhere: {bad.rises_everywhere}")
    return ok, "; ".join(parts)


def criterion_2():
    worst = 0.0
    for family, m in (("TS", fam.explicit_taylor()), ("2s4p", fam.explicit_2s4p())):
        so = so_pair_from_butcher(m)
        for K in (K_DEFAULT, 1.0):
            worst = max(worst, abs(max_r(so, "SD", K) - closed_form_C(family, K)))
    ts = closed_form_C("TS", K_DEFAULT)
    ok = worst <= 1e-4 and abs(ts - 0.618034) <= 1e-6
    return ok, f"max |max_r - closed form| = {worst:.2e}; closed_form_C(TS, 1/sqrt2) = {ts:.7f}"


def criterion_3():
    parts, ok = [], True
    for name in EXPLICIT_SSP:
        r = certify(lookup(name)).certified_r
        lam = _sweep(name).lambda_obs
        ok &= lam >= r - 0.01
        parts.append(f"{name} {lam:.4f} >= {r:.4f}")
    return ok, "; ".join(parts)


def criterion_4():
    failures = []
    for name in method_names():
        spec = lookup(name)
        cap = 6 if spec.kind in ("explicit", "implicit-nd") else 3
        if not check_order(spec, min(spec.order, cap)).satisfied:
            failures.append(f"{name} fails p={spec.order}")
        if spec.order < cap and check_order(spec, spec.order + 1).satisfied:
            failures.append(f"{name} passes p={spec.order + 1}")
    A = np.array([[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]])
    rk4 = ButcherTD(A, np.zeros((4, 4)), [1 / 6, 1 / 3, 1 / 3, 1 / 6], np.zeros(4))
    rep4, rep5 = mdrk_residuals(rk4, 4), mdrk_residuals(rk4, 5)
    if not rep4.satisfied or rep5.satisfied:
        failures.append("classical RK4 reduction")
    detail = f"{len(method_names())} methods checked; RK4 max residual {rep4.max_abs_residual:.1e}"
    return not failures, detail + ("; " + ", ".join(failures) if failures else "")


def criterion_5():
    worst, ok = -math.inf, True
    for p in (2, 3, 4):
        spec = lookup(f"nd-implicit-p{p}")
        ok &= certify(spec).status is Status.UNCONDITIONAL
        for eps in (1.0, 1e-6):
            prob = RelaxationProblem(eps=eps, m=200, coupled=False)
            for u0 in _relaxation_ics(200).values():
                for ratio in (1, 10, 1000):
                    _, rep = integrate(spec, prob, u0, ratio * prob.eps, 100)
                    worst = max(worst, rep.max_rise_per_step)
    ok &= worst <= TV_TOL
    return ok, f"largest per-step rise {worst:.1e} (dt/dt_FE up to 1000, dt_FE = eps)"


def criterion_6():
    parts, ok = [], True
    for name in IMEX:
        spec = lookup(name)
        r = certify(spec).certified_r
        prob = RelaxationProblem(eps=1e-8, m=200)
        worst = -math.inf
        for u0 in _relaxation_ics(200).values():
            _, rep = integrate(spec, prob, u0, 0.99 * r * prob.dt_fe, 200)
            worst = max(worst, rep.max_rise_per_step)
        ok &= worst <= TV_TOL
        parts.append(f"{name} {worst:.1e}")
    return ok, "largest per-step rise at eps=1e-8: " + "; ".join(parts)


def _riccati_rate(spec) -> float:
    sys_ = RiccatiProblem("explicit" if spec.kind == "explicit" else "implicit")
    dts = [0.1, 0.05, 0.025, 0.0125]
    errs = [abs(integrate(spec, sys_, sys_.initial(), dt, round(1 / dt))[0][0] - sys_.exact(1.0)[0])
            for dt in dts]
    return observed_orders(errs, dts)[-1]


def _relaxation_rate(spec) -> float:
    prob = RelaxationProblem(eps=1.0, m=32)
    u0 = prob.initial("smooth")
    L_ex, L_im = prob.linear_operators()
    T, ns = 0.5, [20, 40, 80, 160]
    ref = expm(T * (L_ex + L_im)) @ u0
    errs = [np.abs(integrate(spec, prob, u0, T / n, n)[0] - ref).max() for n in ns]
    return observed_orders(errs, [T / n for n in ns])[-1]


def criterion_7():
    parts, ok = [], True
    for name in method_names():
        spec = lookup(name)
        rate = _relaxation_rate(spec) if name in IMEX else _riccati_rate(spec)
        ok &= abs(rate - spec.order) <= 0.2
        parts.append(f"{name} {rate:.2f}/{spec.order}")
    return ok, "; ".join(parts)


def criterion_8():
    rng = np.random.default_rng(8)
    worst = 0.0
    for name in method_names():
        spec = lookup(name)
        if spec.kind != "explicit":
            continue
        m = spec.method
        for _ in range(10):
            L = rng.normal(size=(5, 5))
            dt = 0.5 / np.linalg.norm(L, 2)
            u = rng.normal(size=5)
            ref = linear_step_matrix(m.A, m.Adot, m.b, m.bdot, dt * L) @ u
            sys_ = CallableSystem(5, F_ex=lambda v, L=L: L @ v, Fdot_ex=lambda v, L=L: L @ (L @ v))
            got = step_explicit(m, sys_, u, dt)
            worst = max(worst, np.abs(got - ref).max() / np.abs(ref).max())
    return worst <= 1e-12, f"max relative deviation {worst:.1e}"


def criterion_9():
    parts, ok = [], True
    for name in GLM:
        spec = lookup(name)
        r = certify(spec).certified_r
        worst = -math.inf
        for eps in (1e-8, 1.0):
            prob = RelaxationProblem(eps=eps, m=200)
            for u0 in _relaxation_ics(200).values():
                _, rep = integrate(spec, prob, u0, r * prob.dt_fe, 200)
                worst = max(worst, rep.max_rise_window)
        ok &= worst <= TV_TOL
        parts.append(f"{name} (k={spec.method.k}) {worst:.1e}")
    return ok, "largest rise over the k-step window: " + "; ".join(parts)


CRITERIA = {
    1: ("TV sweep reproduces lambda_obs", criterion_1),
    2: ("certified coefficients match closed forms", criterion_2),
    3: ("lambda_obs is at least the certified coefficient", criterion_3),
    4: ("order-condition suite", criterion_4),
    5: ("implicit methods are unconditionally SSP", criterion_5),
    6: ("IMEX methods are stable independently of eps", criterion_6),
    7: ("temporal convergence orders", criterion_7),
    8: ("explicit methods match the linear oracle", criterion_8),
    9: ("GLM window bound", criterion_9),
}


def _line(n: int) -> tuple[bool, str]:
    title, fn = CRITERIA[n]
    ok, detail = fn()
    return ok, f"{'PASS' if ok else 'FAIL'} criterion {n}: {title}: {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, line = _line(n)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [_line(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
