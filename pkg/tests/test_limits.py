import json

import numpy as np
import pytest

from persistwalk import limits, walk
from persistwalk.errors import ParameterError
from persistwalk.laws import AsymParams


def test_build_pi_delta():
    wp = limits.build_pi_delta(AsymParams(0, 0, 1, 2), 0.01)
    assert (wp.alpha, wp.beta) == pytest.approx((0.01, 0.02))
    wp = limits.build_pi_delta(AsymParams(0.3, 0.6, 1, 2), 0.0)
    assert (wp.alpha, wp.beta) == (0.3, 0.6)
    for dx in (1e-6, 0.1):
        with pytest.raises(ParameterError):
            limits.build_pi_delta(AsymParams(1.0, 0.5, 0.5, 0.0), dx)
    with pytest.raises(ParameterError):
        limits.build_pi_delta(AsymParams(0.5, 0.5), -0.1)


def test_regime_time_steps():
    assert limits.Regime("ITN", 0.01).dt == 0.01
    assert limits.Regime("LLN", 0.01, 2.0).dt == pytest.approx(0.005)
    assert limits.Regime("CLT", 0.01, 2.0).dt == pytest.approx(5e-5)
    assert limits.Regime("CUBIC", 0.1, 1.0).dt == pytest.approx(1e-3)
    with pytest.raises(ParameterError):
        limits.Regime("FOO", 0.1)
    with pytest.raises(ParameterError):
        limits.Regime("CLT", 0.0)


def test_report_structure_and_reproducibility(seed):
    a = limits.run_itn_regime(1.0, 2.0, 0.01, [0.5, 1.0], 2000, seed)
    b = limits.run_itn_regime(1.0, 2.0, 0.01, [0.5, 1.0], 2000, seed)
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert d["regime"] == "ITN" and d["n_paths"] == 2000 and d["seed"] == seed
    assert d["passed"] == a.passed
    for t in d["tests"]:
        assert t["reference"] and t["threshold"] is not None
    assert {t["name"] for t in d["tests"]} >= {"ks_walk_vs_limit", "mean_vs_limit", "first_change_exponential", "lipschitz", "tail_decay"}
    assert d["metadata"]["t_snapped"] == [0.5, 1.0]


def test_itn_regime_small(seed):
    rep = limits.run_itn_regime(1.0, 1.0, 0.005, [1.0], 10**4, seed)
    assert rep.test("ks_walk_vs_limit", 1.0).passed
    rep = limits.run_itn_regime(1.0, 2.0, 0.005, [1.0], 10**4, seed, y0=1)
    assert rep.passed and rep.metadata["limit"] == "+Z^{c1,c0}"


def test_itn_regime_rejects_infeasible(seed):
    with pytest.raises(ParameterError):
        limits.run_itn_regime(300.0, 1.0, 0.005, [1.0], 100, seed)
    with pytest.raises(ParameterError):
        limits.run_itn_regime(1.0, 1.0, 0.005, [0.001], 100, seed)


def test_lln_symmetric_mean(seed):
    rep = limits.run_lln_regime(AsymParams(0.4, 0.4), 0.02, [1.0], 4000, seed, dx_ladder=(0.08, 0.04))
    assert rep.test("mean_vs_limit").passed
    assert rep.references[0]["limit"] == 0.0
    assert rep.test("variance_shrinks").passed


def test_clt_negative_control(seed):
    ap = AsymParams(0.5, 0.5)
    good = limits.run_clt_regime(ap, 0.04, [1.0], 5000, seed)
    bad = limits.run_clt_regime(ap, 0.04, [1.0], 5000, seed, reference_variance_scale=2.0)
    assert good.test("ks_vs_normal").passed
    assert not bad.test("ks_vs_normal").passed
    assert bad.failing() == ["ks_vs_normal@t=1.0"]


def test_clt_degenerate_is_mean_only(seed):
    rep = limits.run_clt_regime(AsymParams(0.0, 0.5, 1.0, 0.0), 0.04, [1.0], 2000, seed, dx_ladder=(0.08, 0.04))
    names = {t.name for t in rep.tests}
    assert "ks_vs_normal" not in names and "mean_bias_intercept" in names
    assert rep.metadata["degenerate"] is True


def test_cubic_requires_negative_rate(seed):
    with pytest.raises(ParameterError):
        limits.run_cubic_regime(0.5, 1.0, 0.1, [1.0], 100, seed)
    with pytest.raises(ParameterError):
        limits.run_cubic_regime(-1.0, 1.0, 0.1, [1.0], 100, seed, ks_times=[2.0])


def test_cubic_small_run_matches_finite_dx_law(seed):
    rep = limits.run_cubic_regime(-1.0, 1.0, 0.1, [0.5, 1.0], 4000, seed)
    assert rep.test("ks_vs_finite_dx_law", 1.0).passed
    assert rep.test("variance_linear", 0.5).passed


def test_jittered_lattice_cdf():
    cdf = limits._jittered_lattice_cdf([0.0, 1.0], [0.25, 0.75], 0.5)
    assert cdf(np.array([-1.0, 0.0, 0.5, 1.0, 2.0])).tolist() == pytest.approx([0.0, 0.125, 0.25, 0.625, 1.0])


def test_kstate_and_order2_small(seed):
    kp = walk.KStateParams((-1.0, 0.0, 1.0), ((0, 1, 0.5), (0.8, 0, 1.2), (0.5, 1.5, 0)), 0.01)
    rep = limits.run_kstate_regime(kp, [1.0], 3000, seed)
    assert {t.name for t in rep.tests} == {"ks_walk_vs_limit", "holding_time_exponential"}
    op = walk.Order2Params(1.0, 2.0, 0.7, 0.4, 0.01)
    for start in ((-1, -1), (1, 1), (1, -1), (-1, 1)):
        rep = limits.run_order2_regime(op, start, [1.0], 3000, seed)
        assert rep.metadata["limit"] in ("-Z^{c0',c1'}", "+Z^{c1',c0'}", "eps-mixture")
    assert rep.metadata["p_negative_branch"] == pytest.approx(1 - rep.metadata["v0"])


def test_order2_limit_mixture_weights(seed):
    lim, info = limits.order2_limit_samples(1.0, 2.0, 0.7, 0.4, 1, -1, np.array([1e-9]), 20000, seed)
    # at t ~ 0 the limit is -t or +t: the sign reveals eps
    neg = np.mean(lim[:, 0] < 0)
    assert abs(neg - info["p_negative_branch"]) < 4 * np.sqrt(0.25 / 20000)
