"""Scaling-regime laboratory: rescaled walk ensembles checked against their limits.

Every regime follows the same pattern. Build the perturbed transition
probabilities for a given ``dx``, simulate an ensemble on the lattice, snap each
requested time to ``t' = floor(t/dt) dt`` and compare the rescaled positions
with an analytic reference or an exact sampler of the limit law.

The observed quantity is the displacement ``dx (X_k - X_0)``. Its law differs
from ``dx X_k`` only by the constant ``dx Y_0``, which vanishes in every limit
but is a visible bias at desk-scale ``dx``.

Tests run at a single level ``level`` with a Bonferroni split across the time
grid. Moment checks use a fixed ``4`` standard-error band. Each outcome records
its statistic, threshold and the reference it was compared with.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import laws, rng, stats, walk
from .errors import ParameterError
from .itn import ItnParams, ctmc_integral_ensemble, itn_ensemble
from .laws import AsymParams

REGIMES = ("ITN", "LLN", "CLT", "CUBIC", "KSTATE", "ORDER2")
Z_BAND = 4.0
DEFAULT_LEVEL = 0.01
CLIP_STEPS = 10
# one-sided 1% normal quantile, for the variance-shrinkage comparison
_Z_ONE_SIDED = 2.3263478740408408


@dataclass(frozen=True)
class Regime:
    """Scaling regime: ``r dt = dx`` (LLN), ``dx^2`` (CLT), ``dx^3`` (CUBIC), ``dt = dx`` otherwise."""

    tag: str
    dx: float
    r: float = 1.0

    def __post_init__(self):
        if self.tag not in REGIMES:
            raise ParameterError(f"unknown regime {self.tag!r}; expected one of {REGIMES}")
        if not (self.dx > 0 and math.isfinite(self.dx)):
            raise ParameterError("dx must be positive and finite")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ParameterError("r must be positive and finite")

    @property
    def dt(self) -> float:
        if self.tag == "LLN":
            return self.dx / self.r
        if self.tag == "CLT":
            return self.dx**2 / self.r
        if self.tag == "CUBIC":
            return self.dx**3 / self.r
        return self.dx


@dataclass
class TestOutcome:
    name: str
    t: float | None
    statistic: float
    threshold: float
    passed: bool
    reference: str
    p_value: float | None = None
    kind: str = "z"


@dataclass
class RegimeReport:
    regime: str
    params: dict
    t_grid: list
    n_paths: int
    seed: int
    level: float
    summaries: list = field(default_factory=list)
    references: list = field(default_factory=list)
    tests: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tests)

    def failing(self) -> list[str]:
        return [f"{t.name}@t={t.t}" if t.t is not None else t.name for t in self.tests if not t.passed]

    def test(self, name: str, t: float | None = None) -> TestOutcome:
        for out in self.tests:
            if out.name == name and (t is None or out.t == t):
                return out
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(_plain(self.to_dict()), indent=indent, sort_keys=True, allow_nan=True)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# --- construction ---------------------------------------------------------------------


def build_pi_delta(ap: AsymParams, dx: float, y0: int = -1) -> walk.WalkParams:
    """Perturbed two-state chain ``alpha = alpha0 + c0 dx``, ``beta = beta0 + c1 dx``."""
    if not (dx >= 0 and math.isfinite(dx)):
        raise ParameterError("dx must be nonnegative and finite")
    alpha = ap.alpha0 + ap.c0 * dx
    beta = ap.beta0 + ap.c1 * dx
    for name, v in (("alpha0 + c0*dx", alpha), ("beta0 + c1*dx", beta)):
        if not (0.0 <= v <= 1.0):
            raise ParameterError(f"infeasible dx={dx}: {name} = {v!r} lies outside [0, 1]")
    return walk.WalkParams(alpha, beta, y0)


def _snap(t_grid, dt):
    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(not (t > 0) for t in t_grid):
        raise ParameterError("t_grid must be a nonempty list of positive times")
    steps = np.array([walk.lattice_index(t, dt) for t in t_grid], dtype=np.int64)
    if np.any(steps < 1):
        raise ParameterError(f"every t must cover at least one lattice step of size {dt}")
    return t_grid, steps, steps * dt


def _check_paths(n_paths):
    if int(n_paths) != n_paths or n_paths < 20:
        raise ParameterError("n_paths must be an integer >= 20")
    return int(n_paths)


def _summary(label, t, x):
    s = stats.summarize(x)
    return {"sample": label, "t": t, "n": s.n, "mean": s.mean, "variance": s.variance, "se": s.se}


def _z_outcome(name, t, x, ref, ref_label):
    s = stats.summarize(x)
    z = s.zscore(ref)
    return TestOutcome(name, t, z, Z_BAND, bool(abs(z) <= Z_BAND), ref_label)


def _ks2_outcome(name, t, a, b, lo, hi, level, ref_label):
    # atoms at the edges of the support are compared through their clipped mass
    res = stats.ks_two_sample(np.clip(a, lo, hi), np.clip(b, lo, hi))
    return TestOutcome(name, t, res.d, level, not res.rejected(level), ref_label, res.p_approx, "ks2")


def _ks1_outcome(name, t, x, cdf, level, ref_label):
    res = stats.ks_one_sample(x, cdf)
    return TestOutcome(name, t, res.d, level, not res.rejected(level), ref_label, res.p_approx, "ks1")


def _jitter(seed, n, width):
    """Uniform ``(-width, width)`` noise, one draw per path, from its own seed."""
    u = rng.uniform_block(rng.derive_seed(seed, "lattice-jitter"), np.arange(n, dtype=np.uint64), 0, 1)[:, 0]
    return (2.0 * u - 1.0) * width


def _variance_se(x):
    x = np.asarray(x, dtype=np.float64)
    d = (x - x.mean()) ** 2
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(x.size))


def _lipschitz_outcome(result: walk.EnsembleResult, max_step: float, dx: float, dt: float):
    """Path-wise ``|Z(s) - Z(u)| <= (dx/dt)|s - u|`` between observation times.

    In lattice units: ``|X_b - X_a| <= max_step * (b - a)`` for every path.
    """
    order = np.argsort(result.steps)
    k = result.steps[order]
    x = result.x[:, order].astype(np.float64)
    if k.size < 2:
        excess = 0.0
    else:
        excess = float(np.max(np.abs(np.diff(x, axis=1)) - max_step * np.diff(k)[None, :]))
    return TestOutcome(
        "lipschitz", None, excess, 0.0, bool(excess <= 1e-9), f"(dx/dt)-Lipschitz bound, dx/dt = {dx / dt:g}", None, "bound"
    )


def _ladder(ladder, dx):
    ladder = tuple(float(v) for v in ladder)
    if len(ladder) < 2 or any(not (v > 0) for v in ladder):
        raise ParameterError("dx ladder needs at least two positive entries")
    return tuple(sorted(set(ladder + (float(dx),)), reverse=True))


def _shrink_outcome(name, t, var_hi, se_hi, var_lo, se_lo, dx_hi, dx_lo):
    z = (var_hi - var_lo) / math.hypot(se_hi, se_lo)
    return TestOutcome(
        name, t, z, _Z_ONE_SIDED, bool(z > _Z_ONE_SIDED), f"Var at dx={dx_lo:g} below Var at dx={dx_hi:g} (one-sided 1%)"
    )


def _monotone_outcome(name, t, rows):
    """Along a decreasing dx ladder no variance rises by more than 4 combined SE."""
    worst = -math.inf
    for a, b in zip(rows, rows[1:]):
        worst = max(worst, (b["variance"] - a["variance"]) / math.hypot(a["var_se"], b["var_se"]))
    return TestOutcome(name, t, worst, Z_BAND, bool(worst <= Z_BAND), "variance non-increasing along the dx ladder up to noise")


def _ladder_rows(ap, dxs, regime_tag, t, n_paths, seed, y0, observe):
    rows = []
    for d in dxs:
        reg = Regime(regime_tag, d, ap.r)
        wp = build_pi_delta(ap, d, y0)
        k = walk.lattice_index(t, reg.dt)
        ens = walk.order1_ensemble(wp, k, [k], n_paths, rng.derive_seed(seed, f"ladder-{d!r}"))
        sample = observe(ens.x[:, 0], d, reg.dt, k)
        v, vse = _variance_se(sample)
        s = stats.summarize(sample)
        rows.append({"dx": d, "t": k * reg.dt, "steps": k, "mean": s.mean, "se": s.se, "variance": v, "var_se": vse})
    return rows


# --- ITN regime ---------------------------------------------------------------------------


def run_itn_regime(c0, c1, dx, t_grid, n_paths, seed, y0: int = -1, level: float = DEFAULT_LEVEL) -> RegimeReport:
    """``alpha0 = beta0 = 0``, ``dt = dx``: the walk converges to ``-Z^{c0,c1}`` (``y0=-1``) or ``Z^{c1,c0}`` (``y0=+1``)."""
    n_paths = _check_paths(n_paths)
    ap = AsymParams(0.0, 0.0, c0, c1)
    wp = build_pi_delta(ap, dx, y0)
    reg = Regime("ITN", dx)
    dt = reg.dt
    t_grid, steps, t_snap = _snap(t_grid, dt)
    T = int(steps.max())
    if not (0 < wp.alpha < 1 and 0 < wp.beta < 1):
        raise ParameterError("ITN regime needs 0 < c_i dx < 1")
    ens = walk.order1_ensemble_skipahead(wp, T, steps, n_paths, seed)
    rates = ItnParams(c0, c1) if y0 < 0 else ItnParams(c1, c0)
    ref = itn_ensemble(rates, t_snap, n_paths, rng.derive_seed(seed, "itn-oracle"))
    rep = RegimeReport(
        "ITN",
        {"c0": c0, "c1": c1, "dx": dx, "dt": dt, "y0": y0, "alpha": wp.alpha, "beta": wp.beta},
        t_grid,
        n_paths,
        seed,
        level,
        metadata={
            "observable": "dx * (X_k - y0)",
            "limit": "-Z^{c0,c1}" if y0 < 0 else "+Z^{c1,c0}",
            "start_reading": "y0=+1 is read as the rate-swapped, sign-flipped limit +Z^{c1,c0}",
            "t_snapped": t_snap.tolist(),
        },
    )
    lvl = level / len(t_grid)
    h = CLIP_STEPS * dt
    for j, t in enumerate(t_grid):
        ts = float(t_snap[j])
        disp = dx * (ens.x[:, j] - y0).astype(np.float64)
        lim = y0 * ref.z[:, j]
        mz = y0 * laws.mean_z(rates, ts)
        exact_mean, _ = laws.walk_displacement_moments(int(steps[j]), wp.alpha, wp.beta, y0)
        rep.summaries += [_summary("walk", t, disp), _summary("limit_sampler", t, lim)]
        rep.references.append({"t": t, "t_snapped": ts, "limit_mean": mz, "finite_dx_mean": dx * exact_mean})
        rep.tests.append(_ks2_outcome("ks_walk_vs_limit", t, disp, lim, -ts + h, ts - h, lvl, "exact ITN sampler"))
        rep.tests.append(_z_outcome("mean_vs_limit", t, disp, mz, "mean_z of the limit"))
    # first sign change: dt * T_1 -> Exp(rate of the starting state)
    first_rate = c0 if y0 < 0 else c1
    # a run of A steps ends somewhere in ((A-1) dt, A dt]; spread it uniformly over that step
    u = rng.uniform_block(rng.derive_seed(seed, "first-change-jitter"), np.arange(n_paths, dtype=np.uint64), 0, 1)[:, 0]
    t1 = dt * (walk.first_runs(wp, n_paths, seed).astype(np.float64) - u)
    rep.tests.append(
        _ks1_outcome("first_change_exponential", None, t1, stats.exponential_cdf(1.0 / first_rate), level, f"Exp(mean 1/{first_rate:g})")
    )
    rep.tests.append(_lipschitz_outcome(ens, 1.0, dx, dt))
    rep.tests.append(_tail_outcome(ens.changes))
    return rep


def _tail_outcome(counts):
    """Log-linear fit of ``P(N = k)`` beyond the mode; the slope must be negative."""
    freq = np.bincount(np.asarray(counts, dtype=np.int64))
    mode = int(np.argmax(freq))
    ks = np.arange(mode, freq.size)
    keep = freq[ks] >= 10
    ks = ks[keep]
    if ks.size < 3:
        return TestOutcome("tail_decay", None, math.nan, 0.0, False, "too few populated tail cells", None, "slope")
    y = np.log(freq[ks] / freq.sum())
    slope = float(np.polyfit(ks, y, 1)[0])
    return TestOutcome("tail_decay", None, slope, 0.0, bool(slope < 0), "log P(N=k) decreasing beyond the mode", None, "slope")


# --- LLN regime ----------------------------------------------------------------------------


def _displacement(x, d, dt, k, y0):
    return d * (np.asarray(x, dtype=np.float64) - y0)


def run_lln_regime(
    ap: AsymParams, dx, t_grid, n_paths, seed, y0: int = -1, dx_ladder=(0.04, 0.02, 0.01), level: float = DEFAULT_LEVEL
) -> RegimeReport:
    """``r dt = dx``: the rescaled walk concentrates on ``-r t eta0 / (1 - rho0)``."""
    n_paths = _check_paths(n_paths)
    reg = Regime("LLN", dx, ap.r)
    dt = reg.dt
    wp = build_pi_delta(ap, dx, y0)
    t_grid, steps, t_snap = _snap(t_grid, dt)
    ens = walk.order1_ensemble(wp, int(steps.max()), steps, n_paths, seed)
    drift = laws.lln_drift(ap)
    rep = RegimeReport(
        "LLN",
        {**asdict(ap), "dx": dx, "dt": dt, "y0": y0, "alpha": wp.alpha, "beta": wp.beta},
        t_grid,
        n_paths,
        seed,
        level,
        metadata={"observable": "dx * (X_k - y0)", "t_snapped": t_snap.tolist()},
    )
    for j, t in enumerate(t_grid):
        ts = float(t_snap[j])
        disp = _displacement(ens.x[:, j], dx, dt, steps[j], y0)
        m, v = laws.walk_displacement_moments(int(steps[j]), wp.alpha, wp.beta, y0)
        rep.summaries.append(_summary("walk", t, disp))
        rep.references.append({"t": t, "t_snapped": ts, "limit": drift * ts, "finite_dx_mean": dx * m, "finite_dx_variance": dx * dx * v})
        rep.tests.append(_z_outcome("mean_vs_limit", t, disp, drift * ts, "deterministic limit -r t eta0/(1-rho0)"))
    t_last = max(t_grid)
    rows = _ladder_rows(ap, _ladder(dx_ladder, dx), "LLN", t_last, n_paths, seed, y0, lambda x, d, dt_, k: _displacement(x, d, dt_, k, y0))
    rep.metadata["dx_ladder"] = rows
    rep.tests.append(_monotone_outcome("variance_monotone", t_last, rows))
    rep.tests.append(
        _shrink_outcome("variance_shrinks", t_last, rows[0]["variance"], rows[0]["var_se"], rows[-1]["variance"], rows[-1]["var_se"], rows[0]["dx"], rows[-1]["dx"])
    )
    return rep


# --- CLT regime ---------------------------------------------------------------------------


def _clt_sample(x, d, dt, k, y0, shift):
    return d * (np.asarray(x, dtype=np.float64) - y0) + k * dt * shift / math.sqrt(dt)


def run_clt_regime(
    ap: AsymParams,
    dx,
    t_grid,
    n_paths,
    seed,
    y0: int = -1,
    dx_ladder=(0.04, 0.02, 0.01),
    level: float = DEFAULT_LEVEL,
    reference_variance_scale: float = 1.0,
) -> RegimeReport:
    """``r dt = dx^2``: the shifted walk converges to ``N(m t, sigma^2 t)``.

    When ``sigma^2 = 0`` (``alpha0 = 0``, ``beta0 = 0`` or ``rho0 = -1``) the limit
    is deterministic and only the mean is tested: the bias of the sample mean is
    regressed on ``dx`` along the ladder and its intercept must vanish.
    ``reference_variance_scale`` multiplies the reference variance (a negative
    control when set away from 1).
    """
    n_paths = _check_paths(n_paths)
    if ap.rho0 == 1.0:
        raise ParameterError("CLT regime undefined for rho0 = 1")
    reg = Regime("CLT", dx, ap.r)
    dt = reg.dt
    wp = build_pi_delta(ap, dx, y0)
    m, sigma2 = laws.clt_params(ap)
    shift = laws.clt_shift_coefficient(ap)
    degenerate = sigma2 <= 1e-15 or ap.alpha0 == 0.0 or ap.beta0 == 0.0
    t_grid, steps, t_snap = _snap(t_grid, dt)
    ens = walk.order1_ensemble(wp, int(steps.max()), steps, n_paths, seed)
    rep = RegimeReport(
        "CLT",
        {**asdict(ap), "dx": dx, "dt": dt, "y0": y0, "alpha": wp.alpha, "beta": wp.beta},
        t_grid,
        n_paths,
        seed,
        level,
        metadata={
            "observable": "dx * (X_k - y0) + t' * shift / sqrt(dt)",
            "shift": shift,
            "m": m,
            "sigma2": sigma2,
            "degenerate": degenerate,
            "reference_variance_scale": reference_variance_scale,
            "t_snapped": t_snap.tolist(),
        },
    )
    samples = []
    lvl = level / len(t_grid)
    for j, t in enumerate(t_grid):
        ts = float(t_snap[j])
        xi = _clt_sample(ens.x[:, j], dx, dt, steps[j], y0, shift)
        samples.append(xi)
        em, ev = laws.walk_displacement_moments(int(steps[j]), wp.alpha, wp.beta, y0)
        rep.summaries.append(_summary("walk", t, xi))
        rep.references.append(
            {
                "t": t,
                "t_snapped": ts,
                "limit_mean": m * ts,
                "limit_variance": sigma2 * ts * reference_variance_scale,
                "finite_dx_mean": dx * em + ts * shift / math.sqrt(dt),
                "finite_dx_variance": dx * dx * ev,
            }
        )
        if not degenerate:
            # the lattice has spacing 2 dx; uniform jitter of that width makes it continuous
            jit = xi + _jitter(seed, n_paths, dx)
            cdf = stats.normal_cdf(m * ts, sigma2 * ts * reference_variance_scale)
            rep.tests.append(_ks1_outcome("ks_vs_normal", t, jit, cdf, lvl, f"N(m t, sigma^2 t), m={m:g}, sigma^2={sigma2:g}"))
            rep.tests.append(_z_outcome("mean_vs_limit", t, xi, m * ts, "m t"))
        else:
            rep.tests.append(_z_outcome("mean_vs_finite_dx", t, xi, dx * em + ts * shift / math.sqrt(dt), "exact finite-dx mean"))
    if not degenerate:
        order = np.argsort(t_snap)
        for a, b in zip(order, order[1:]):
            z = stats.correlation_z(samples[a], samples[b] - samples[a])
            rep.tests.append(
                TestOutcome("increment_independence", t_grid[b], z, Z_BAND, bool(abs(z) <= Z_BAND), f"corr(xi_{t_grid[a]:g}, increment) = 0")
            )
    else:
        t_last = max(t_grid)
        rows = _ladder_rows(ap, _ladder(dx_ladder, dx), "CLT", t_last, n_paths, seed, y0, lambda x, d, dt_, k: _clt_sample(x, d, dt_, k, y0, shift))
        for row in rows:
            row["bias"] = row["mean"] - m * row["t"]
        w = np.array([1.0 / r["se"] ** 2 for r in rows])
        A = np.array([[1.0, r["dx"]] for r in rows])
        b = np.array([r["bias"] for r in rows])
        cov = np.linalg.inv(A.T @ (w[:, None] * A))
        coef = cov @ (A.T @ (w * b))
        z0 = float(coef[0] / math.sqrt(cov[0, 0]))
        rep.metadata["dx_ladder"] = rows
        rep.metadata["bias_fit"] = {"intercept": float(coef[0]), "slope": float(coef[1]), "intercept_se": math.sqrt(cov[0, 0])}
        rep.tests.append(TestOutcome("mean_bias_intercept", t_last, z0, Z_BAND, bool(abs(z0) <= Z_BAND), f"mean -> m t = {m * t_last:g} as dx -> 0"))
        rep.tests.append(_monotone_outcome("variance_monotone", t_last, rows))
    return rep


# --- cubic regime ---------------------------------------------------------------------------


def _jittered_lattice_cdf(points, probs, half_width):
    """CDF of a lattice law convolved with ``U(-half_width, half_width)``."""
    points = np.asarray(points, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)

    def cdf(x):
        x = np.asarray(x, dtype=np.float64)
        out = np.empty(x.shape)
        flat = x.ravel()
        res = out.ravel()
        for lo in range(0, flat.size, 2048):
            seg = flat[lo : lo + 2048]
            frac = np.clip((seg[:, None] - points[None, :] + half_width) / (2 * half_width), 0.0, 1.0)
            res[lo : lo + 2048] = frac @ probs
        return out

    return cdf


def run_cubic_regime(
    c0,
    r,
    dx,
    t_grid,
    n_paths,
    seed,
    y0: int = -1,
    ks_times=None,
    level: float = DEFAULT_LEVEL,
    dx_ladder=(),
    exact_law: bool = True,
) -> RegimeReport:
    """``alpha0 = beta0 = 1``, ``c0 = c1 < 0``, ``r dt = dx^3``: limit ``sqrt(-r c0) W``.

    ``ks_times`` (default: the whole grid) selects the times with a KS test;
    the Bonferroni split is over those times. ``dx_ladder`` adds informative
    variance summaries at other ``dx`` without tests. With ``exact_law`` the
    sample is also compared with the exact finite-``dx`` law, which separates
    simulation error from the ``O(dx)`` distance to the limit.
    """
    n_paths = _check_paths(n_paths)
    s2 = laws.cubic_variance(r, c0)
    ap = AsymParams(1.0, 1.0, c0, c0, r)
    reg = Regime("CUBIC", dx, r)
    dt = reg.dt
    wp = build_pi_delta(ap, dx, y0)
    t_grid, steps, t_snap = _snap(t_grid, dt)
    ks_times = list(t_grid) if ks_times is None else [float(t) for t in ks_times]
    if any(t not in t_grid for t in ks_times):
        raise ParameterError("ks_times must be a subset of t_grid")
    ens = walk.order1_ensemble(wp, int(steps.max()), steps, n_paths, seed)
    rep = RegimeReport(
        "CUBIC",
        {"c0": c0, "r": r, "dx": dx, "dt": dt, "y0": y0, "alpha": wp.alpha, "beta": wp.beta},
        t_grid,
        n_paths,
        seed,
        level,
        metadata={"observable": "dx * (X_k - y0)", "limit_variance_rate": s2, "ks_times": ks_times, "t_snapped": t_snap.tolist()},
    )
    samples = {}
    lvl = level / max(len(ks_times), 1)
    for j, t in enumerate(t_grid):
        ts = float(t_snap[j])
        disp = _displacement(ens.x[:, j], dx, dt, steps[j], y0)
        samples[t] = (ts, disp)
        em, ev = laws.walk_displacement_moments(int(steps[j]), wp.alpha, wp.beta, y0)
        rep.summaries.append(_summary("walk", t, disp))
        rep.references.append({"t": t, "t_snapped": ts, "limit_variance": s2 * ts, "finite_dx_mean": dx * em, "finite_dx_variance": dx * dx * ev})
        if t in ks_times:
            jit = disp + _jitter(seed, n_paths, dx)
            rep.tests.append(_ks1_outcome("ks_vs_normal", t, jit, stats.normal_cdf(0.0, s2 * ts), lvl, f"N(0, {s2:g} t)"))
            if exact_law:
                support, probs = laws.walk_position_pmf(int(steps[j]), wp.alpha, wp.beta, y0)
                cdf = _jittered_lattice_cdf(dx * (support - y0), probs, dx)
                rep.tests.append(_ks1_outcome("ks_vs_finite_dx_law", t, jit, cdf, lvl, "exact law of the walk at this dx"))
        rep.tests.append(_z_outcome("mean_vs_limit", t, disp, 0.0, "symmetric limit, mean 0"))
    t_ref = 1.0 if 1.0 in samples else t_grid[0]
    ts_ref, ref = samples[t_ref]
    for t in t_grid:
        if t == t_ref:
            continue
        ts, x = samples[t]
        ratio, se = stats.variance_ratio(x, ref)
        z = (ratio - ts / ts_ref) / se
        rep.tests.append(TestOutcome("variance_linear", t, z, Z_BAND, bool(abs(z) <= Z_BAND), f"Var(t)/Var({t_ref:g}) = t/{t_ref:g}"))
    if dx_ladder:
        t_last = max(t_grid)
        rows = _ladder_rows(ap, tuple(sorted(set(float(v) for v in dx_ladder), reverse=True)), "CUBIC", t_last, n_paths, seed, y0,
                            lambda x, d, dt_, k: _displacement(x, d, dt_, k, y0))
        rep.metadata["dx_ladder"] = rows
    rep.tests.append(_lipschitz_outcome(ens, 1.0, dx, dt))
    return rep


# --- extensions ---------------------------------------------------------------------------


def run_kstate_regime(kp: walk.KStateParams, t_grid, n_paths, seed, start: int = 0, level: float = DEFAULT_LEVEL) -> RegimeReport:
    """``k``-state walk with ``dt = dx = delta_t`` against the exact chain integral ``int_0^t R_s ds``."""
    n_paths = _check_paths(n_paths)
    dt = kp.delta_t
    t_grid, steps, t_snap = _snap(t_grid, dt)
    ens = walk.kstate_ensemble(kp, int(steps.max()), steps, n_paths, seed, start)
    ref = ctmc_integral_ensemble(kp.c, kp.values, start, t_snap, n_paths, rng.derive_seed(seed, "ctmc-oracle"))
    v0 = float(kp.values[start])
    rep = RegimeReport(
        "KSTATE",
        {"values": list(kp.values), "c": [list(row) for row in kp.c], "delta_t": dt, "start": start},
        t_grid,
        n_paths,
        seed,
        level,
        metadata={"observable": "dt * (X_k - value[start])", "t_snapped": t_snap.tolist()},
    )
    lvl = level / len(t_grid)
    lo_v, hi_v = min(kp.values), max(kp.values)
    h = CLIP_STEPS * dt
    for j, t in enumerate(t_grid):
        ts = float(t_snap[j])
        disp = dt * (ens.x[:, j] - v0)
        lim = ref.integral[:, j]
        rep.summaries += [_summary("walk", t, disp), _summary("limit_sampler", t, lim)]
        rep.references.append({"t": t, "t_snapped": ts})
        rep.tests.append(_ks2_outcome("ks_walk_vs_limit", t, disp, lim, lo_v * ts + h, hi_v * ts - h, lvl, "exact chain-integral sampler"))
    exit_rate = float(kp.exit_rates()[start])
    rep.tests.append(
        _ks1_outcome(
            "holding_time_exponential", None, ref.first_hold, stats.exponential_cdf(1.0 / exit_rate), level, f"Exp(mean 1/{exit_rate:g})"
        )
    )
    return rep


def order2_limit_samples(c0, c1, p0, p1, y0, y1, t_snap, n_paths, seed):
    """Exact draws of the limit for start pair ``(y0, y1)``, shape ``(n_paths, len(t_snap))``."""
    v0, v1, e0, e1 = laws.order2_effective(c0, c1, p0, p1)
    neg = -itn_ensemble(ItnParams(e0, e1), t_snap, n_paths, rng.derive_seed(seed, "order2-neg")).z
    if (y0, y1) == (-1, -1):
        return neg, {"limit": "-Z^{c0',c1'}"}
    pos = itn_ensemble(ItnParams(e1, e0), t_snap, n_paths, rng.derive_seed(seed, "order2-pos")).z
    if (y0, y1) == (1, 1):
        return pos, {"limit": "+Z^{c1',c0'}"}
    u = rng.uniform_block(rng.derive_seed(seed, "order2-eps"), np.arange(n_paths, dtype=np.uint64), 0, 1)[:, 0]
    # eps = 0 picks the negative branch
    p_neg = v1 if (y0, y1) == (1, -1) else 1.0 - v0
    pick = (u < p_neg)[:, None]
    return np.where(pick, neg, pos), {"limit": "eps-mixture", "p_negative_branch": p_neg}


def run_order2_regime(op: walk.Order2Params, start, t_grid, n_paths, seed, level: float = DEFAULT_LEVEL) -> RegimeReport:
    """Order-2 walk against ITN with effective rates ``c_i' = c_i v_i`` and the start-dependent sign."""
    n_paths = _check_paths(n_paths)
    y0, y1 = (int(start[0]), int(start[1]))
    dt = op.delta_t
    t_grid, steps, t_snap = _snap(t_grid, dt)
    if np.any(steps < 1):
        raise ParameterError("order-2 walks need at least one step")
    ens = walk.order2_ensemble(op, int(steps.max()), steps, n_paths, seed, y0, y1)
    lim, info = order2_limit_samples(op.c0, op.c1, op.p0, op.p1, y0, y1, t_snap, n_paths, seed)
    v0, v1, e0, e1 = laws.order2_effective(op.c0, op.c1, op.p0, op.p1)
    rep = RegimeReport(
        "ORDER2",
        {"c0": op.c0, "c1": op.c1, "p0": op.p0, "p1": op.p1, "delta_t": dt, "start": [y0, y1]},
        t_grid,
        n_paths,
        seed,
        level,
        metadata={"observable": "dt * (X_k - y0)", "v0": v0, "v1": v1, "c0_eff": e0, "c1_eff": e1, **info, "t_snapped": t_snap.tolist()},
    )
    lvl = level / len(t_grid)
    h = CLIP_STEPS * dt
    for j, t in enumerate(t_grid):
        ts = float(t_snap[j])
        disp = dt * (ens.x[:, j] - y0).astype(np.float64)
        rep.summaries += [_summary("walk", t, disp), _summary("limit_sampler", t, lim[:, j])]
        rep.references.append({"t": t, "t_snapped": ts})
        rep.tests.append(_ks2_outcome("ks_walk_vs_limit", t, disp, lim[:, j], -ts + h, ts - h, lvl, f"ITN sampler, {info['limit']}"))
    return rep


def run_order2_markov_control(c0, c1, dt, t_grid, n_paths, seed, level: float = DEFAULT_LEVEL) -> RegimeReport:
    """Order-2 walk with ``p0 = 1 - c1 dt``, ``p1 = 1 - c0 dt`` (a first-order chain in disguise).

    Its marginals are compared with the ITN-regime walk at ``dx = dt`` and with
    the ``-Z^{c0,c1}`` limit it must share.
    """
    op = walk.Order2Params(c0, c1, 1.0 - c1 * dt, 1.0 - c0 * dt, dt)
    rep = run_order2_regime(op, (-1, -1), t_grid, n_paths, seed, level)
    t_grid_, steps, t_snap = _snap(t_grid, dt)
    o2 = walk.order2_ensemble(op, int(steps.max()), steps, n_paths, seed, -1, -1)
    o1 = walk.order1_ensemble_skipahead(
        build_pi_delta(AsymParams(0, 0, c0, c1), dt), int(steps.max()), steps, n_paths, rng.derive_seed(seed, "markov-control")
    )
    lvl = level / len(t_grid_)
    h = CLIP_STEPS * dt
    for j, t in enumerate(t_grid_):
        ts = float(t_snap[j])
        a = dt * (o2.x[:, j] + 1).astype(np.float64)
        b = dt * (o1.x[:, j] + 1).astype(np.float64)
        rep.tests.append(_ks2_outcome("ks_vs_itn_regime_walk", t, a, b, -ts + h, ts - h, lvl, "ITN-regime first-order walk"))
    rep.metadata["markov_control"] = True
    return rep
