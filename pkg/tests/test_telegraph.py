import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from persistwalk import laws, telegraph
from persistwalk.errors import ParameterError, StabilityError
from persistwalk.itn import ItnParams
from persistwalk.telegraph import FdGrid, InitialData


def test_dalembert_examples():
    assert telegraph.dalembert_u(InitialData.constant(3.0), 0.4, 2.0) == pytest.approx(3.0)
    assert telegraph.dalembert_u(InitialData.linear(1.0), 0.4, 2.0) == pytest.approx(0.4)
    k, a, x, t = 2.0, 1.5, 0.3, 0.7
    assert telegraph.dalembert_u(InitialData.plane_wave(k, a), x, t) == pytest.approx(math.cos(k * x) * math.cos(a * k * t))
    with pytest.raises(ParameterError):
        telegraph.dalembert_u(InitialData.tabulated([0, 1, 2], [0, 1, 0]), 0.5, 0.1)


def test_mc_at_time_zero_and_linear_data(seed):
    f = InitialData.gaussian(0.2, 0.5)
    est, se = telegraph.mc_telegraph(f, 1.0, 1.0, 0.3, 0.0, 100, seed)
    assert est == f(0.3)
    est, se = telegraph.mc_telegraph(InitialData.linear(2.0, 1.0), 1.0, 1.0, 0.3, 1.0, 1000, seed)
    assert est == pytest.approx(1.6, abs=1e-12) and se < 1e-12


def test_plane_wave_oracle_initial_conditions_and_ode():
    for k, a, c in ((2.0, 1.0, 1.5), (0.5, 1.0, 2.0), (1.0, 2.0, 2.0)):
        g, dg, _ = telegraph.plane_wave_derivatives(k, a, c, 0.0)
        assert g == pytest.approx(1.0) and dg == pytest.approx(0.0, abs=1e-15)
    rng = np.random.default_rng(0)
    for t in rng.uniform(0, 5, 20):
        for k, a, c in ((2.0, 1.0, 1.5), (0.5, 1.0, 2.0), (1.0, 2.0, 2.0)):
            g, dg, d2g = telegraph.plane_wave_derivatives(k, a, c, t)
            assert abs(d2g + 2 * c * dg + (a * k) ** 2 * g) < 1e-10


def test_plane_wave_oracle_without_spatial_frequency():
    # g'' + 2c g' = 0 with g(0) = 1, g'(0) = 0 forces g = 1
    for t in (0.0, 0.5, 3.0):
        assert telegraph.plane_wave_oracle(0.0, 1.0, 1.2, t) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.1, 3.0), st.floats(0.0, 4.0))
def test_oracle_is_continuous_near_the_critical_damping(k, c, t):
    a = c / k
    g0 = telegraph.plane_wave_oracle(k, a, c, t)
    g1 = telegraph.plane_wave_oracle(k, a * (1 + 1e-7), c, t)
    assert g0 == pytest.approx(g1, abs=1e-5)
    assert abs(g0) <= 1.0 + 1e-12


def test_mc_matches_plane_wave(seed):
    k, a, c, t = 2.0, 1.0, 1.5, 1.0
    x = np.array([0.0, 0.4, 1.0])
    est, se = telegraph.mc_telegraph(InitialData.plane_wave(k, a), a, c, x, t, 10**5, seed)
    exact = np.cos(k * x) * telegraph.plane_wave_oracle(k, a, c, t)
    assert np.all(np.abs(est - exact) <= 4 * se)


def test_fd_constant_and_wave_limit():
    grid = FdGrid(0.0, 1.0, 50, 0.01, 30)
    sol = telegraph.fd_telegraph(InitialData.constant(2.5), 1.0, 1.0, grid)
    assert np.all(sol.w == 2.5)
    f = InitialData.plane_wave(2 * math.pi, 1.0)
    errs = []
    for nx in (40, 80):
        dx = 1.0 / nx
        nt = int(round(0.5 / (0.5 * dx)))
        sol = telegraph.fd_telegraph(f, 1.0, 0.0, FdGrid(0.0, 1.0, nx, 0.5 / nt, nt))
        errs.append(np.max(np.abs(sol.w[-1] - telegraph.dalembert_u(f, sol.x, 0.5))))
    assert errs[1] < errs[0] / 3


def test_fd_order_and_cfl():
    sizes = [32, 64, 128]
    errs = [telegraph.fd_plane_wave_error(2.0, 1.0, 1.5, 1.0, n) for n in sizes]
    assert abs(telegraph.observed_order(errs, sizes) - 2.0) < 0.2
    with pytest.raises(StabilityError):
        telegraph.fd_telegraph(InitialData.constant(1.0), 1.0, 1.0, FdGrid(0.0, 1.0, 100, 0.02, 5))


def test_fd_maximum_principle():
    f = InitialData.gaussian(0.5, 0.05)
    sol = telegraph.fd_telegraph(f, 1.0, 0.8, FdGrid(0.0, 1.0, 200, 0.0025, 400))
    assert np.max(np.abs(sol.w)) <= f.bound() * (1 + 1e-3)


def test_split_system(seed):
    f = InitialData.plane_wave(2.0, 1.0)
    assert telegraph.mc_telegraph_split(f, 1.0, 1.0, 2.0, 0.3, 0.0, 100, seed)[:2] == (f(0.3), 0.0)
    p = ItnParams(1.0, 2.0)
    we, wo, se_e, se_o = telegraph.mc_telegraph_split(InitialData.constant(1.0), 1.0, 1.0, 2.0, 0.0, 0.8, 10**5, seed)
    pe, po = laws.parity_probs(p, 0.8)
    assert abs(we - pe) <= 4 * se_e and abs(wo - po) <= 4 * se_o
    we, wo, se_e, se_o = telegraph.mc_telegraph_split(f, 1.0, 1.5, 1.5, 0.3, 1.0, 10**5, seed)
    est, se = telegraph.mc_telegraph(f, 1.0, 1.5, 0.3, 1.0, 10**5, seed)
    assert we + wo == pytest.approx(est, abs=1e-12)


def test_small_time_slope(seed):
    f = InitialData.plane_wave(2.0, 1.0)
    slopes = []
    for h in (0.1, 0.01):
        est, _ = telegraph.mc_telegraph(f, 1.0, 1.0, 0.0, h, 10**4, seed)
        slopes.append(abs(est - 1.0) / h)
    assert slopes[1] < slopes[0]
