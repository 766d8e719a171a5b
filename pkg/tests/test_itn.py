import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from persistwalk import itn, rng, stats
from persistwalk.errors import HorizonError, ParameterError
from persistwalk.itn import ItnParams, ItnPath, ItnState


def test_eval_z_basic_cases():
    assert itn.eval_z(ItnPath(np.array([]), 3.0), 2.5) == (2.5, 0)
    u, t = 0.7, 2.0
    z, n = itn.eval_z(ItnPath(np.array([u]), 3.0), t)
    assert n == 1 and z == pytest.approx(2 * u - t)
    assert itn.eval_z(ItnPath(np.array([0.5]), 1.0), 0.0) == (0.0, 0)
    with pytest.raises(HorizonError):
        itn.eval_z(ItnPath(np.array([0.5]), 1.0), 1.5)


def test_validation():
    with pytest.raises(ParameterError):
        ItnParams(0.0, 1.0)
    with pytest.raises(ParameterError):
        ItnState(2.0, 0, 1.0)
    with pytest.raises(ParameterError):
        ItnPath(np.array([0.4, 0.2]), 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.integers(0, 10**6), st.floats(0.01, 4.0))
def test_position_is_bounded_by_time(c0, c1, stream, t):
    p = itn.sample_jumps(ItnParams(c0, c1), 4.0, rng.RngSpec(99, stream))
    z, n = itn.eval_z(p, t)
    assert abs(z) <= t + 1e-12
    assert n == np.searchsorted(p.jump_times, t, side="right")
    assert (t - z) / 2 <= t + 1e-12


def test_ensemble_rows_match_single_paths(seed):
    params = ItnParams(1.0, 2.5)
    times = np.array([0.3, 1.0, 2.0])
    ens = itn.itn_ensemble(params, times, 25, seed, chunk=7)
    for i in range(25):
        p = itn.sample_jumps(params, 2.0, rng.RngSpec(seed, i))
        z, n = itn.eval_z(p, times)
        np.testing.assert_allclose(ens.z[i], z, atol=1e-12)
        assert ens.n[i].tolist() == n.tolist()


def test_no_jump_probability_and_first_arrival(seed):
    c0, c1, t = 1.3, 0.6, 1.0
    ens = itn.itn_ensemble(ItnParams(c0, c1), [t], 10**5, seed)
    none = (ens.n[:, 0] == 0).astype(float)
    assert abs(stats.summarize(none).zscore(math.exp(-c0 * t))) < 4
    first = ens.first_jump[np.isfinite(ens.first_jump)]
    # conditional on a jump before t, the first arrival is an exponential truncated at t
    cdf = lambda x: np.expm1(-c0 * np.minimum(x, t)) / math.expm1(-c0 * t)
    assert not stats.ks_one_sample(first, cdf).rejected(0.01)


def test_first_arrival_exponential(seed):
    ens = itn.itn_ensemble(ItnParams(2.0, 1.0), [50.0], 10**5, seed)
    assert not stats.ks_one_sample(ens.first_jump, stats.exponential_cdf(0.5)).rejected(0.01)


def test_equal_rates_give_poisson_counts(seed):
    c, t = 1.7, 2.0
    n = itn.itn_ensemble(ItnParams(c, c), [t], 10**5, seed).n[:, 0].astype(float)
    s = stats.summarize(n)
    assert abs(s.zscore(c * t)) < 4
    v, vse = np.var(n, ddof=1), np.std((n - n.mean()) ** 2, ddof=1) / math.sqrt(n.size)
    assert abs(v - c * t) < 4 * vse


def test_markov_restart_slopes():
    st_even = ItnState(0.3, 2, 1.0)
    st_odd = ItnState(0.3, 3, 1.0)
    p = ItnParams(1.0, 2.0)
    h = 1e-9
    for state, sign in ((st_even, 1.0), (st_odd, -1.0)):
        r = itn.markov_restart(state, p, 1.0, rng.RngSpec(5, 0))
        if r.tail.jump_times.size == 0 or r.tail.jump_times[0] > h:
            z, n = r.eval(h)
            assert (z - 0.3) / h == pytest.approx(sign)
            assert n == state.n


def test_restart_law_matches_direct_simulation(seed):
    p = ItnParams(1.0, 2.0)
    s, t = 0.6, 0.8
    direct = itn.itn_ensemble(p, [s + t], 10**4, seed).z[:, 0]
    first = itn.itn_ensemble(p, [s], 10**4, rng.derive_seed(seed, "first"))
    glued = np.empty(10**4)
    for i in range(10**4):
        state = ItnState(first.z[i, 0], int(first.n[i, 0]), s)
        glued[i] = itn.markov_restart(state, p, t, rng.RngSpec(rng.derive_seed(seed, "tail"), i)).eval(t)[0]
    assert not stats.ks_two_sample(direct, glued).rejected(0.01)


def test_randomized_symmetric():
    # p = 1 and a path without jumps gives the atom at +1 exactly
    for i in range(50):
        v = itn.sample_randomized_symmetric(0.01, 1.0, 1.0, rng.RngSpec(3, i))
        assert -1.0 <= v <= 1.0
        if v > 0.999999:
            assert v == 1.0
    vals = np.array([itn.sample_randomized_symmetric(1.0, 0.5, 1.0, rng.RngSpec(4, i)) for i in range(4000)])
    assert abs(stats.summarize(vals).zscore(0.0)) < 4


def test_ctmc_holding_and_jumps(seed):
    rates = [[0, 1.0, 0.5], [0.8, 0, 1.2], [0.5, 1.5, 0]]
    ens = itn.ctmc_integral_ensemble(rates, [-1, 0, 1], 1, [20.0], 10**4, seed)
    assert not stats.ks_one_sample(ens.first_hold, stats.exponential_cdf(1 / 2.0)).rejected(0.01)
    assert np.all(np.abs(ens.integral) <= 20.0 + 1e-9)
    with pytest.raises(ParameterError):
        itn.ctmc_integral_ensemble([[1, 1], [1, 0]], [-1, 1], 0, [1.0], 10, seed)
