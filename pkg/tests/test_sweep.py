import os
import subprocess
import sys

import numpy as np
import pytest

from tdssp import kernels
from tdssp.integrators import integrate
from tdssp.problems import AdvectionProblem, step_ic
from tdssp.registry import lookup
from tdssp.sweep import CSV_SCHEMA, MethodClassError, tv_rise, tv_sweep

COMPILED = kernels.compiled_backend()
needs_compiled = pytest.mark.skipif(COMPILED is None, reason="compiled extension not built")

SMALL = dict(dx=1 / 200, steps=30, lambda_min=0.1, lambda_max=1.5, lambda_step=0.05, refine=1e-3)


@needs_compiled
@pytest.mark.parametrize("name", ["td-ts", "td-3s5p", "ts-3s4p"])
def test_compiled_and_python_runs_agree(name):
    m = lookup(name).method
    u0 = step_ic(128)
    py = kernels.python_backend()
    for squared in (0, 1):
        for lam in (0.3, 0.9):
            a = COMPILED.advect_tdrk(u0, m.A, m.Adot, m.b, m.bdot, lam, squared, 25)
            b = py.advect_tdrk(u0, m.A, m.Adot, m.b, m.bdot, lam, squared, 25)
            np.testing.assert_allclose(a[0], b[0], atol=1e-13)
            np.testing.assert_allclose(a[1], b[1], atol=1e-12)


@needs_compiled
def test_compiled_stencils_are_exact():
    u = np.random.default_rng(5).normal(size=64)
    py = kernels.python_backend()
    for fn in ("upwind", "centered", "squared_upwind"):
        np.testing.assert_array_equal(getattr(COMPILED, fn)(u, 2.0), getattr(py, fn)(u, 2.0))
    assert COMPILED.total_variation(u) == pytest.approx(py.total_variation(u), rel=1e-14)


def test_pure_python_switch():
    env = dict(os.environ, TDSSP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from tdssp import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_fused_run_matches_generic_integrator():
    p = AdvectionProblem(m=100)
    spec = lookup("td-2s4p")
    lam, n = 0.6, 20
    u, rep = integrate(spec, p, p.initial(), lam * p.dx, n)
    m = spec.method
    uf, tv = kernels.advect_tdrk(p.initial(), m.A, m.Adot, m.b, m.bdot, lam, False, n)
    np.testing.assert_allclose(uf, u, atol=1e-12)
    np.testing.assert_allclose(tv, rep.values, atol=1e-11)


def test_tv_rise_is_zero_below_the_limit():
    m = lookup("td-ts").method
    per, over = tv_rise(m, 0.5, step_ic(200), 40, False)
    assert per <= 1e-12 and over <= 1e-12
    per, _ = tv_rise(m, 1.5, step_ic(200), 40, False)
    assert per > 1e-3


def test_small_sweep_locates_taylor_limit():
    res = tv_sweep("td-ts", **SMALL)
    assert res.variant == "centered"
    assert 0.55 <= res.lambda_obs <= 0.7
    assert not res.rises_everywhere
    assert any(r.phase == "refine" for r in res.rows)


def test_sweep_uses_squared_stencil_for_ts_methods():
    res = tv_sweep("ts-3s4p", **SMALL)
    assert res.variant == "squared-upwind"
    assert res.lambda_obs >= 0.99


def test_nonssp_method_rises_everywhere():
    res = tv_sweep("td-2s3p-nonssp", **SMALL)
    assert res.lambda_obs == 0.0 and res.rises_everywhere


def test_sweep_is_independent_of_worker_count():
    a = tv_sweep("td-2s4p", workers=1, **SMALL)
    b = tv_sweep("td-2s4p", workers=3, **SMALL)
    assert a.rows == b.rows and a.lambda_obs == b.lambda_obs


def test_sweep_csv(tmp_path):
    res = tv_sweep("td-ts", **SMALL)
    text = res.to_csv(tmp_path / "s.csv")
    lines = text.splitlines()
    assert lines[0] == CSV_SCHEMA
    assert lines[1] == "lambda,max_rise_per_step,max_rise_over_initial,phase"
    assert lines[-1].startswith("# method=td-ts")
    assert len(lines) == len(res.rows) + 3
    assert res.summary()["lambda_obs"] == res.lambda_obs


def test_sweep_rejects_non_explicit_methods():
    with pytest.raises(MethodClassError):
        tv_sweep("imex-rk-p2", **SMALL)
    with pytest.raises(MethodClassError):
        tv_sweep("nd-implicit-p2", **SMALL)


def test_sweep_argument_checks():
    with pytest.raises(ValueError):
        tv_sweep("td-ts", dx=0.3)
    with pytest.raises(ValueError):
        tv_sweep("td-ts", **dict(SMALL, lambda_step=0.0))
    with pytest.raises(ValueError):
        tv_sweep("td-ts", variant="spectral", **SMALL)
