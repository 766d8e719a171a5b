import math

import numpy as np
import pytest
from scipy import stats as sst

from persistwalk import rng, stats


def _normals(seed, n):
    u = rng.uniform(rng.RngSpec(seed, 0), n)
    return sst.norm.ppf(u)


def test_summarize_small_cases():
    s = stats.summarize([3.0, 3.0, 3.0])
    assert s.variance == 0.0 and s.zscore(3.0) == 0.0
    s = stats.summarize([-1.0, 1.0])
    assert s.mean == 0.0 and s.variance == 2.0
    with pytest.raises(ValueError):
        stats.summarize([1.0])


def test_summarize_matches_two_pass():
    x = _normals(5, 10**5) + 1e6
    s = stats.summarize(x)
    assert s.mean == pytest.approx(math.fsum(x) / x.size, rel=1e-15)
    assert s.variance == pytest.approx(np.var(x - 1e6, ddof=1), rel=1e-9)


def test_ks_one_sample_matches_scipy_statistic():
    x = _normals(6, 500)
    res = stats.ks_one_sample(x, stats.normal_cdf(0, 1))
    ref = sst.kstest(x, "norm")
    assert res.d == pytest.approx(ref.statistic, abs=1e-12)
    assert res.p_approx == pytest.approx(ref.pvalue, abs=0.02)


def test_ks_one_sample_point_mass():
    res = stats.ks_one_sample(np.zeros(100), stats.normal_cdf(0, 1))
    assert res.d >= 0.5


def test_ks_one_sample_level_is_honest():
    rej = 0
    for i in range(200):
        x = _normals(1000 + i, 400)
        rej += stats.ks_one_sample(x, stats.normal_cdf(0, 1)).rejected(0.01)
    # binomial(200, 0.01): 8 or more rejections has probability below 1e-3
    assert rej <= 7


def test_ks_two_sample():
    a, b = _normals(1, 800), _normals(2, 600)
    res = stats.ks_two_sample(a, b)
    ref = sst.ks_2samp(a, b)
    assert res.d == pytest.approx(ref.statistic, abs=1e-12)
    assert stats.ks_two_sample(a, a).d == 0.0
    assert stats.ks_two_sample(a, a + 1.0).rejected(0.01)


def test_kolmogorov_sf_limits():
    assert stats.kolmogorov_sf(0.0) == 1.0
    assert stats.kolmogorov_sf(1.36) == pytest.approx(0.049, abs=0.001)
    assert stats.kolmogorov_sf(10.0) < 1e-80


def test_chi_square_detects_wrong_probs():
    counts = np.array([300, 200, 500])
    _, dof, p = stats.chi_square_gof(counts, np.array([0.3, 0.2, 0.5]))
    assert dof == 2 and p > 0.99
    assert stats.chi_square_gof(counts, np.array([0.5, 0.2, 0.3]))[2] < 1e-10


def test_variance_ratio_of_scaled_sample():
    a = _normals(9, 20000)
    b = 0.5 * a + 0.5 * _normals(10, 20000)
    ratio, se = stats.variance_ratio(a, b)
    assert abs(ratio - 2.0) < 4 * se
    assert 0 < se < 0.1


def test_correlation_z():
    a, b = _normals(3, 5000), _normals(4, 5000)
    assert abs(stats.correlation_z(a, b)) < 4
    assert stats.correlation_z(a, a + 0.1 * b) > 50
