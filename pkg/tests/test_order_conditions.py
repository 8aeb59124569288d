import json

import numpy as np
import pytest

from oracles import EX, IM, TreeOracle, colored_trees, glm_butcher, imex_rk_butcher, multiset_close
from tdssp.order_conditions import (
    CONDITION_COUNTS,
    OrderRangeError,
    check_order,
    imex_glm_residuals,
    imex_mdrk_residuals,
    labels,
    mdrk_residuals,
)
from tdssp.registry import lookup, method_names
from tdssp.tableaux import ButcherGLM, ButcherIMEX, ButcherTD


def _random_td(rng, s=4):
    A = rng.uniform(-1, 1, (s, s))
    Ad = rng.uniform(-1, 1, (s, s))
    return A, Ad, rng.uniform(-1, 1, s), rng.uniform(-1, 1, s)


def _signed_A(A, Ad, b, bd, p):
    from tdssp.order_conditions import _terms_A

    return [lhs - rhs for lab, lhs, rhs in _terms_A(A, Ad, b, bd, 6) if lab.split(".")[1] == f"p{p}"]


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("p", [1, 2, 3, 4, 5, 6])
def test_single_operator_conditions_match_tree_expansion(seed, p):
    rng = np.random.default_rng(seed)
    A, Ad, b, bd = _random_td(rng)
    oracle = TreeOracle.rk(A, Ad, b, bd)
    ref = [oracle.residual(t) for t in colored_trees(p)]
    got = _signed_A(A, Ad, b, bd, p)
    assert len(got) == CONDITION_COUNTS["A"][p] == len(ref)
    assert multiset_close(got, ref, 1e-12)


def test_order_six_conditions_are_distinct_trees():
    rng = np.random.default_rng(7)
    A, Ad, b, bd = _random_td(rng, 5)
    oracle = TreeOracle.rk(A, Ad, b, bd)
    ref = {round(oracle.residual(t), 10): t for t in colored_trees(6)}
    got = _signed_A(A, Ad, b, bd, 6)
    matched = [ref[round(v, 10)] for v in got]
    assert len(set(matched)) == 20


def test_tall_tree_label():
    rng = np.random.default_rng(3)
    A, Ad, b, bd = _random_td(rng)
    tall = (IM, ())
    for _ in range(5):
        tall = (IM, (tall,))
    ref = TreeOracle.rk(A, Ad, b, bd).residual(tall)
    got = dict(zip(labels("A", 6), _signed_A(A, Ad, b, bd, 6)))
    assert got["A.p6.20"] == pytest.approx(ref, abs=1e-12)


def _imex_signed(m: ButcherIMEX, p):
    from tdssp.order_conditions import _terms_B

    return [lhs - rhs for lab, lhs, rhs in _terms_B(m) if lab.split(".")[1] == f"p{p}"]


def _glm_signed(m: ButcherGLM, p):
    from tdssp.order_conditions import _terms_C

    return [lhs - rhs for lab, lhs, rhs in _terms_C(m) if lab.split(".")[1] == f"p{p}"]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_imex_rk_conditions_match_bicolored_trees(seed):
    rng = np.random.default_rng(seed)
    s = 4
    Ah = np.tril(rng.uniform(-1, 1, (s, s)), -1)
    A, Ad = rng.uniform(-1, 1, (s, s)), rng.uniform(-1, 1, (s, s))
    bh, b, bd = (rng.uniform(-1, 1, s) for _ in range(3))
    oracle = TreeOracle.imex_rk(Ah, A, Ad, bh, b, bd)
    m = ButcherIMEX(Ah, A, Ad, bh, b, bd)
    for p in (1, 2, 3):
        ref = [oracle.residual(t) for t in colored_trees(p, (EX, IM))]
        assert multiset_close(_imex_signed(m, p), ref, 1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_glm_conditions_match_bicolored_trees(seed, k):
    rng = np.random.default_rng(seed)
    s = 3
    R = rng.uniform(0, 1, (s, k))
    P = np.tril(rng.uniform(0, 0.3, (s, s)), -1)
    W = np.tril(rng.uniform(0, 0.3, (s, s)), -1)
    D, Dd = rng.uniform(0, 1, s), rng.uniform(-1, 0, s)
    G, Q, V = rng.uniform(0, 1, k), rng.uniform(0, 1, s), rng.uniform(0, 1, s)
    bf = glm_butcher(R, P, W, D, Dd, G, Q, V, 0.7)
    oracle = TreeOracle(**bf)
    m = ButcherGLM(bf["T"], bf["Ahat"], bf["A"], bf["Adot"], bf["theta"], bf["bhat"], bf["b"], bf["bdot"])
    for p in (1, 2, 3):
        ref = [oracle.residual(t) for t in colored_trees(p, (EX, IM))]
        assert multiset_close(_glm_signed(m, p), ref, 1e-11)


@pytest.mark.parametrize("name", method_names())
def test_registry_methods_meet_their_order(name):
    spec = lookup(name)
    rep = check_order(spec, min(spec.order, 6 if spec.kind in ("explicit", "implicit-nd") else 3))
    assert rep.satisfied, rep.to_dict()


@pytest.mark.parametrize("name", [n for n in method_names() if lookup(n).kind in ("explicit", "implicit-nd")
                                  or lookup(n).order < 3])
def test_registry_methods_fail_next_order(name):
    spec = lookup(name)
    rep = check_order(spec, spec.order + 1)
    assert rep.max_abs_residual > 1e-3


def test_imex_registry_conditions_match_dense_oracle():
    spec = lookup("imex-rk-p3")
    m = spec.method
    Ah, A, Ad, bh, b, bd = imex_rk_butcher(m.P, m.W, m.D, m.Ddot, m.r)
    oracle = TreeOracle.imex_rk(Ah, A, Ad, bh, b, bd)
    worst = max(abs(oracle.residual(t)) for p in (1, 2, 3) for t in colored_trees(p, (EX, IM)))
    assert worst < 1e-8


def test_report_shape_and_json():
    rep = check_order(lookup("td-2s4p"), 4)
    assert [lab for lab, _ in rep.residuals] == ["A.p1.1", "A.p2.1", "A.p3.1", "A.p3.2",
                                                "A.p4.1", "A.p4.2", "A.p4.3", "A.p4.4"]
    doc = json.loads(rep.to_json())
    assert doc["satisfied"] is True and doc["method"] == "td-2s4p"
    assert set(rep.by_order(4)) == set(labels("A", 4))


def test_condition_counts():
    m = lookup("td-3s5p").method
    assert len(mdrk_residuals(m, 6).residuals) == 1 + 1 + 2 + 4 + 9 + 20
    g = lookup("imex-glm-2step-5stage-p3").method
    from tdssp.tableaux import to_butcher_glm, to_butcher_imex

    assert len(imex_glm_residuals(to_butcher_glm(g), 3).residuals) == 20
    r = lookup("imex-rk-p3").method
    assert len(imex_mdrk_residuals(to_butcher_imex(r), 3).residuals) == 20


def test_taylor_order_two_exactly():
    m = ButcherTD([[0.0]], [[0.0]], [1.0], [0.5])
    assert mdrk_residuals(m, 2).max_abs_residual == 0.0
    assert mdrk_residuals(m, 3).by_order(3)["A.p3.1"] == pytest.approx(1 / 3)


@pytest.mark.parametrize("p", [0, 7, 2.5])
def test_order_out_of_range(p):
    with pytest.raises(OrderRangeError):
        mdrk_residuals(lookup("td-ts").method, p)


def test_imex_order_out_of_range():
    with pytest.raises(OrderRangeError):
        check_order(lookup("imex-rk-p3"), 4)


def test_printed_decimal_methods_use_looser_tolerance():
    spec = lookup("nd-implicit-p4")
    assert spec.tol == 1e-8
    assert check_order(spec, 4).tol == 1e-8
    assert check_order(spec, 4, tol=1e-20).satisfied is False
