"""Sample summaries and the goodness-of-fit tests used by the verification lab."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp
from scipy import stats as _st


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    variance: float
    se: float

    def zscore(self, reference: float) -> float:
        """Standardised distance of the sample mean from ``reference``."""
        if self.se == 0.0:
            return 0.0 if self.mean == reference else math.copysign(math.inf, self.mean - reference)
        return (self.mean - reference) / self.se


@dataclass(frozen=True)
class KsResult:
    d: float
    p_approx: float
    n: int

    def rejected(self, level: float) -> bool:
        return self.p_approx < level


def summarize(samples) -> SampleSummary:
    """Two-pass mean and unbiased variance."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise ValueError("summarize needs at least two samples")
    mean = math.fsum(x) / n
    dev = x - mean
    # compensated two-pass formula
    var = (math.fsum(dev * dev) - math.fsum(dev) ** 2 / n) / (n - 1)
    var = max(var, 0.0)
    return SampleSummary(n, mean, var, math.sqrt(var / n))


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the Kolmogorov distribution, by its alternating series."""
    if lam < 0.27:
        # the series converges slowly here and the tail mass is 1 to double precision
        return 1.0
    s = 0.0
    for j in range(1, 101):
        term = math.exp(-2.0 * j * j * lam * lam)
        s += term if j % 2 else -term
        if term < 1e-17 * max(abs(s), 1e-300):
            break
    return min(max(2.0 * s, 0.0), 1.0)


def _asymptotic_p(d: float, n_eff: float) -> float:
    en = math.sqrt(n_eff)
    return kolmogorov_sf((en + 0.12 + 0.11 / en) * d)


def _clean(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64).ravel()
    if np.isnan(x).any():
        raise ValueError("samples contain NaN")
    return np.sort(x)


def ks_one_sample(samples, cdf) -> KsResult:
    """Sup distance between the empirical CDF and ``cdf`` (vectorised callable)."""
    x = _clean(samples)
    n = x.size
    if n < 10:
        raise ValueError("ks_one_sample needs at least 10 samples")
    f = np.asarray(cdf(x), dtype=np.float64)
    # at tied values only the outermost empirical steps matter
    upper = np.searchsorted(x, x, side="right") / n
    lower = np.searchsorted(x, x, side="left") / n
    d = float(max(np.max(upper - f), np.max(f - lower), 0.0))
    return KsResult(d, _asymptotic_p(d, n), n)


def ks_two_sample(a, b) -> KsResult:
    """Sup distance between two empirical CDFs."""
    x = _clean(a)
    y = _clean(b)
    n1, n2 = x.size, y.size
    if min(n1, n2) < 10:
        raise ValueError("ks_two_sample needs at least 10 samples per side")
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / n1
    fy = np.searchsorted(y, grid, side="right") / n2
    d = float(np.max(np.abs(fx - fy)))
    return KsResult(d, _asymptotic_p(d, n1 * n2 / (n1 + n2)), min(n1, n2))


def normal_cdf(mean: float, variance: float):
    sd = math.sqrt(variance)
    if sd == 0.0:
        return lambda x: (np.asarray(x) >= mean).astype(np.float64)
    return lambda x: _sp.ndtr((np.asarray(x) - mean) / sd)


def exponential_cdf(mean: float):
    return lambda x: -np.expm1(-np.maximum(np.asarray(x, dtype=np.float64), 0.0) / mean)


def chi_square_gof(observed, expected_prob, min_expected: float = 5.0):
    """Pearson chi-square GOF; cells with small expectation are pooled into the last cell.

    Returns ``(statistic, dof, p_value)``.
    """
    obs = np.asarray(observed, dtype=np.float64)
    prob = np.asarray(expected_prob, dtype=np.float64)
    n = obs.sum()
    exp = n * prob
    keep_obs, keep_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            keep_obs.append(acc_o)
            keep_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if keep_exp:
            keep_obs[-1] += acc_o
            keep_exp[-1] += acc_e
        else:
            keep_obs.append(acc_o)
            keep_exp.append(acc_e)
    o = np.array(keep_obs)
    e = np.array(keep_exp)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = len(o) - 1
    if dof < 1:
        return stat, dof, 1.0
    return stat, dof, float(_st.chi2.sf(stat, dof))


def correlation_z(a, b) -> float:
    """Fisher z statistic for zero correlation between paired samples."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    r = float(np.corrcoef(a, b)[0, 1])
    r = min(max(r, -0.999999999), 0.999999999)
    return math.atanh(r) * math.sqrt(a.size - 3)


def variance_ratio(a, b) -> tuple[float, float]:
    """Ratio of sample variances of paired samples ``a``, ``b`` with its delta-method SE.

    The pairing (same paths observed at two times) is kept in the SE through
    the covariance of squared deviations.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.size
    da = (a - a.mean()) ** 2
    db = (b - b.mean()) ** 2
    va, vb = da.mean(), db.mean()
    cov = np.cov(np.vstack([da, db]))
    ratio = va / vb
    grad = np.array([1.0 / vb, -va / vb**2])
    se = math.sqrt(float(grad @ cov @ grad) / n)
    return float(ratio), se
