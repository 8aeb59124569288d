import math

import numpy as np
import pytest
from scipy.linalg import expm

from oracles import glm_butcher, imex_rk_butcher, linear_step_matrix
from tdssp import families as fam
from tdssp.integrators import (
    BlowUpError,
    CallableSystem,
    HistoryError,
    MonitorReport,
    StageSolveError,
    StepHistory,
    integrate,
    observed_orders,
    step_explicit,
    step_imex_glm,
    step_imex_rk,
    step_implicit_nd,
)
from tdssp.problems import AdvectionProblem, RelaxationProblem, RiccatiProblem
from tdssp.registry import lookup, method_names
from tdssp.tableaux import ImplicitNDMethod

RNG = np.random.default_rng(11)
EXPLICIT = [n for n in method_names() if lookup(n).kind == "explicit"]
IMEX = [n for n in method_names() if lookup(n).kind in ("imex-rk", "imex-glm")]


def _linear(L):
    return CallableSystem(L.shape[0], F_ex=lambda u: L @ u, Fdot_ex=lambda u: L @ (L @ u))


def test_taylor_on_riccati():
    sys = RiccatiProblem("explicit")
    u = step_explicit(fam.explicit_taylor(), sys, np.array([1.0]), 0.1)
    assert u[0] == pytest.approx(0.91, abs=1e-15)


@pytest.mark.parametrize("name", ["td-ts", "nd-implicit-p3", "imex-rk-p3"])
def test_zero_step_leaves_state_unchanged(name):
    spec = lookup(name)
    sys = RiccatiProblem("implicit" if spec.kind != "explicit" else "explicit")
    u = np.array([0.7])
    step = {"explicit": step_explicit, "implicit-nd": step_implicit_nd, "imex-rk": step_imex_rk}[spec.kind]
    np.testing.assert_array_equal(step(spec.method, sys, u, 0.0), u)


def test_glm_zero_step_with_constant_history():
    m = fam.imex_glm("kstep-p2", 3)
    u = RNG.normal(size=4)
    out = step_imex_glm(m, CallableSystem(4), StepHistory(3, [u, u, u]), 0.0)
    np.testing.assert_array_equal(out, u)


def test_2s4p_matches_taylor_polynomial():
    L = RNG.normal(size=(5, 5))
    dt = 0.5 / np.linalg.norm(L, 2)
    u = RNG.normal(size=5)
    Z = dt * L
    poly = sum(np.linalg.matrix_power(Z, j) / math.factorial(j) for j in range(5))
    got = step_explicit(fam.explicit_2s4p(), _linear(L), u, dt)
    np.testing.assert_allclose(got, poly @ u, atol=1e-13)


@pytest.mark.parametrize("name", EXPLICIT)
def test_explicit_methods_match_linear_oracle(name):
    m = lookup(name).method
    for _ in range(10):
        L = RNG.normal(size=(4, 4))
        dt = 0.4 / np.linalg.norm(L, 2)
        u = RNG.normal(size=4)
        ref = linear_step_matrix(m.A, m.Adot, m.b, m.bdot, dt * L) @ u
        got = step_explicit(m, _linear(L), u, dt)
        assert np.abs(got - ref).max() <= 1e-12 * np.abs(ref).max()


def test_implicit_taylor_scalar_solve():
    sys = CallableSystem(1, F_im=lambda u: -u, Fdot_im=lambda u: u,
                         solve=lambda a, g, gd: a / (1 + g - gd))
    u = step_implicit_nd(fam.implicit_nd(2), sys, np.array([1.0]), 1.0)
    assert u[0] == pytest.approx(0.4, abs=1e-15)


def test_implicit_p3_is_unconditional_on_stiff_relaxation():
    p = RelaxationProblem(eps=1e-8, m=32, coupled=False)
    _, rep = integrate(lookup("nd-implicit-p3"), p, p.initial("step"), 1.0, 100)
    assert rep.max_rise_per_step <= 1e-12


def test_imex_rk2_without_implicit_part():
    m = fam.imex_rk(2)
    sys = CallableSystem(1, F_ex=lambda u: -u)
    got = step_imex_rk(m, sys, np.array([1.0]), 0.1)
    Ah, _, _, bh, _, _ = imex_rk_butcher(m.P, m.W, m.D, m.Ddot, m.r)
    z = -0.1
    s = len(bh)
    Y = np.linalg.solve(np.eye(s) - z * Ah, np.ones(s))
    assert got[0] == pytest.approx(1 + z * bh @ Y, abs=1e-15)
    # second order: agrees with exp(-0.1) through the z^2 term
    assert got[0] == pytest.approx(1 - 0.1 + 0.005, abs=2e-4)


def test_one_step_glm_is_forward_euler_combination():
    m = fam.imex_glm("1step-p2")
    L = np.array([[-1.0, 0.5], [0.2, -0.7]])
    sys = CallableSystem(2, F_ex=lambda u: L @ u)
    u, dt = np.array([1.0, -2.0]), 0.05
    got = step_imex_glm(m, sys, StepHistory(1, [u]), dt)
    bf = glm_butcher(m.R, m.P, m.W, m.D, m.Ddot, m.Gamma, m.Q, m.V, m.r)
    s = m.s
    Z = dt * L
    big = np.eye(s * 2) - np.kron(bf["Ahat"], Z)
    Y = np.linalg.solve(big, np.kron(bf["T"], np.eye(2)) @ u)
    ref = bf["theta"][0] * u + np.kron(bf["bhat"][None, :], Z) @ Y
    np.testing.assert_allclose(got, ref, atol=1e-14)
    # every coefficient of the combination is nonnegative
    assert np.all(m.R >= 0) and np.all(m.P >= 0) and np.all(m.W >= 0)
    assert np.all(m.Q >= 0) and np.all(m.V >= 0) and np.all(m.Gamma >= 0)


def test_kstep_glm_respects_window_bound():
    p = RelaxationProblem(eps=0.05, m=64)
    spec = lookup("imex-glm-kstep-p2", k=3)
    dt = 0.99 * spec.ssp_coefficient * p.dt_fe
    _, rep = integrate(spec, p, p.initial("step"), dt, 150)
    assert rep.k == 3 and rep.starting_policy.startswith("single-step")
    assert rep.max_rise_window <= 1e-12


def test_history_must_be_full():
    m = fam.imex_glm("2step-p2")
    with pytest.raises(HistoryError):
        step_imex_glm(m, CallableSystem(1), StepHistory(2, [np.ones(1)]), 0.1)
    with pytest.raises(ValueError):
        StepHistory(0)
    h = StepHistory(2, [np.zeros(1), np.ones(1), 2 * np.ones(1)])
    assert h.ready and len(h) == 2 and h[0][0] == 1.0


# ---------------------------------------------------------------------------
# driver


def test_single_step_run_equals_step():
    sys = RiccatiProblem("explicit")
    spec = lookup("td-3s5p")
    u, rep = integrate(spec, sys, np.array([1.0]), 0.2, 1)
    np.testing.assert_array_equal(u, step_explicit(spec.method, sys, np.array([1.0]), 0.2))
    assert rep.n_steps == 1


def test_integrate_is_deterministic():
    p = RelaxationProblem(eps=0.1, m=32)
    spec = lookup("imex-glm-2step-5stage-p3")
    a, ra = integrate(spec, p, p.initial("step"), 0.01, 30)
    b, rb = integrate(spec, p, p.initial("step"), 0.01, 30)
    np.testing.assert_array_equal(a, b)
    assert ra.values == rb.values


def test_taylor_advection_below_limit_has_no_rise():
    p = AdvectionProblem(m=1600)
    _, rep = integrate(lookup("td-ts"), p, p.initial(), 0.5 * p.dx, 50)
    assert rep.max_rise_per_step <= 1e-10


def test_nonssp_method_raises_tv_at_small_courant():
    p = AdvectionProblem(m=1600)
    _, rep = integrate(lookup("td-2s3p-nonssp"), p, p.initial(), 0.05 * p.dx, 50)
    assert rep.max_rise_per_step > 0


def test_blowup_reports_step():
    p = AdvectionProblem(m=64)
    with pytest.raises(BlowUpError) as info:
        integrate(lookup("td-ts"), p, p.initial(), 5 * p.dx, 500)
    assert info.value.step is not None and 1 <= info.value.step <= 500


def test_nonfinite_stage_reports_stage():
    sys = CallableSystem(1, F_ex=lambda u: np.array([np.nan]))
    with pytest.raises(BlowUpError) as info:
        step_explicit(fam.explicit_2s4p(), sys, np.array([1.0]), 0.1)
    assert info.value.stage == 1


def test_bad_stage_solver_is_caught():
    sys = CallableSystem(1, F_im=lambda u: -u, solve=lambda a, g, gd: a)
    with pytest.raises(StageSolveError):
        step_implicit_nd(fam.implicit_nd(2), sys, np.array([1.0]), 0.5)


def test_positive_second_derivative_coefficient_warns():
    m = ImplicitNDMethod([1.0], [[0.0]], [1.0], [0.5])
    sys = CallableSystem(1, F_im=lambda u: -u, Fdot_im=lambda u: u,
                         solve=lambda a, g, gd: a / (1 + g - gd))
    with pytest.warns(RuntimeWarning, match="positive"):
        step_implicit_nd(m, sys, np.array([1.0]), 0.1)


def test_integrate_argument_checks():
    sys = RiccatiProblem("explicit")
    with pytest.raises(ValueError):
        integrate(lookup("td-ts"), sys, np.array([1.0]), 0.1, 0)
    with pytest.raises(ValueError):
        integrate(lookup("imex-glm-2step-p2"), RelaxationProblem(m=8), np.zeros(16), 0.1, 3,
                  starting="exact")


def test_glm_exact_starting_values():
    from tdssp.problems import SplitRiccatiProblem

    p = SplitRiccatiProblem(lam=0.5)
    _, rep = integrate(lookup("imex-glm-2step-p2"), p, np.array([1.0]), 0.1, 5)
    assert rep.starting_policy == "exact"
    assert rep.values[1] == pytest.approx(p.exact(0.1)[0])


def test_debug_stage_values():
    p = RelaxationProblem(eps=0.5, m=16)
    _, rep = integrate(lookup("imex-rk-p2"), p, p.initial("step"), 0.01, 3, debug_stages=True)
    assert len(rep.stage_values) == 3 * lookup("imex-rk-p2").method.s
    _, rep = integrate(lookup("imex-rk-p2"), p, p.initial("step"), 0.01, 3)
    assert rep.stage_values == ()


def test_monitor_report(tmp_path):
    rep = MonitorReport((2.0, 1.5, 1.8, 1.7, 2.1), 0.1, k=2)
    assert rep.max_rise_per_step == pytest.approx(0.4)
    assert rep.max_rise_over_initial == pytest.approx(0.1)
    assert rep.max_rise_window == pytest.approx(0.3)
    text = rep.to_csv(tmp_path / "m.csv")
    lines = text.strip().splitlines()
    assert lines[0] == "step,t,functional,rise_from_prev,rise_from_initial"
    assert len(lines) == 6
    assert (tmp_path / "m.csv").read_text() == text
    assert MonitorReport((1.0,), 0.1).max_rise_per_step == 0.0


# ---------------------------------------------------------------------------
# convergence


def _riccati_errors(spec, dts, T=1.0):
    sys = RiccatiProblem("explicit" if spec.kind == "explicit" else "implicit")
    errs = []
    for dt in dts:
        u, _ = integrate(spec, sys, np.array([1.0]), dt, round(T / dt))
        errs.append(abs(u[0] - sys.exact(T)[0]))
    return errs


@pytest.mark.parametrize("name", [n for n in method_names() if lookup(n).kind in ("explicit", "implicit-nd")])
def test_one_operator_convergence_order(name):
    spec = lookup(name)
    dts = [0.1, 0.05, 0.025, 0.0125]
    rates = observed_orders(_riccati_errors(spec, dts), dts)
    assert abs(rates[-1] - spec.order) <= 0.2, rates


@pytest.mark.parametrize("name", IMEX)
def test_imex_convergence_on_relaxation(name):
    spec = lookup(name)
    p = RelaxationProblem(eps=1.0, m=32)
    u0 = p.initial("smooth")
    L_ex, L_im = p.linear_operators()
    T = 0.5
    ref = expm(T * (L_ex + L_im)) @ u0
    ns = [20, 40, 80, 160]
    errs = []
    for n in ns:
        u, _ = integrate(spec, p, u0, T / n, n)
        errs.append(np.abs(u - ref).max())
    rates = observed_orders(errs, [T / n for n in ns])
    assert abs(rates[-1] - spec.order) <= 0.2, rates
