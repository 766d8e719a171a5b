"""Closed-form laws of the persistent walk and the integrated telegraph noise.

Walk side: the exact mean of ``X_t``, the moment generating function
``E[lambda^{X_t}]`` and the scaling-limit constants of the Delta-parameterised
chain. ITN side: jump-count probabilities, conditional and marginal densities,
parity masses, the mean, Laplace transforms in space and in time.

Large powers and exponentials are combined in log space so that densities
stay finite for large ``c * t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import special
from .errors import ParameterError
from .itn import ItnParams

QUAD_TOL = 1e-12


@dataclass(frozen=True)
class RateDeriv:
    tau: float
    tau_bar: float
    c: float
    c_bar: float

    @classmethod
    def of(cls, params: ItnParams) -> RateDeriv:
        c0, c1 = params.c0, params.c1
        return cls(0.5 * (c0 + c1), 0.5 * (c1 - c0), c0 + c1, c1 - c0)


@dataclass(frozen=True)
class AsymParams:
    """Base probabilities ``(alpha0, beta0)``, first-order rates ``(c0, c1)`` and rescaling rate ``r``."""

    alpha0: float
    beta0: float
    c0: float = 0.0
    c1: float = 0.0
    r: float = 1.0

    def __post_init__(self):
        for name in ("alpha0", "beta0"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ParameterError(f"{name} must lie in [0, 1], got {v!r}")
        if not (self.r > 0):
            raise ParameterError("r must be positive")
        if not (math.isfinite(self.c0) and math.isfinite(self.c1)):
            raise ParameterError("c0 and c1 must be finite")

    @property
    def rho0(self) -> float:
        return 1.0 - self.alpha0 - self.beta0

    @property
    def eta0(self) -> float:
        return self.beta0 - self.alpha0


# --- persistent walk -------------------------------------------------------------


def expected_x(t: int, alpha: float, beta: float, y0: int) -> float:
    """Exact ``E[X_t]`` for the two-state walk with ``X_0 = Y_0 = y0``."""
    if y0 not in (-1, 1):
        raise ParameterError("y0 must be -1 or +1")
    if not (alpha + beta > 0):
        raise ParameterError("expected_x needs alpha + beta > 0")
    if t < 0:
        raise ParameterError("t must be nonnegative")
    gap = alpha + beta  # 1 - rho
    rho = 1.0 - gap
    pull = alpha if y0 < 0 else beta
    # 1 - rho^(t+1), accurate when rho is near 1
    geom = -math.expm1((t + 1) * math.log(rho)) if rho > 0 else 1.0 - rho ** (t + 1)
    return (alpha - beta) / gap * (t + 1) + y0 * 2.0 * pull / gap**2 * geom


def walk_displacement_moments(k: int, alpha: float, beta: float, y0: int) -> tuple[float, float]:
    """Exact mean and variance of ``X_k - X_0 = Y_1 + ... + Y_k``.

    Uses ``E[Y_i] = mu + rho^i (y0 - mu)`` with ``mu = (alpha - beta)/(alpha + beta)`` and
    ``Cov(Y_i, Y_j) = rho^(j-i) Var(Y_i)`` for ``i <= j``.
    """
    if not (alpha + beta > 0):
        raise ParameterError("need alpha + beta > 0")
    if k < 0:
        raise ParameterError("k must be nonnegative")
    if k == 0:
        return 0.0, 0.0
    rho = 1.0 - alpha - beta
    mu = (alpha - beta) / (alpha + beta)
    i = np.arange(1, k + 1, dtype=np.float64)
    m = mu + rho**i * (y0 - mu)
    v = 1.0 - m * m
    if rho == 1.0:
        w = 1.0 + 2.0 * (k - i)
    else:
        w = 1.0 + 2.0 * rho * (1.0 - rho ** (k - i)) / (1.0 - rho)
    return math.fsum(m), math.fsum(v * w)


def walk_position_pmf(k: int, alpha: float, beta: float, y0: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact law of ``X_k`` by forward recursion on ``(X_t, Y_t)``; returns ``(support, probs)``.

    Cost is ``O(k^2)``; support points of zero probability are dropped.
    """
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not (0.0 <= v <= 1.0):
            raise ParameterError(f"{name} must lie in [0, 1]")
    if y0 not in (-1, 1):
        raise ParameterError("y0 must be -1 or +1")
    k = int(k)
    if k < 0:
        raise ParameterError("k must be nonnegative")
    n = 2 * k + 3
    off = k + 1
    down = np.zeros(n)  # Y_t = -1
    up = np.zeros(n)  # Y_t = +1
    (down if y0 < 0 else up)[off + y0] = 1.0
    for _ in range(k):
        nd = np.zeros(n)
        nu = np.zeros(n)
        nd[:-1] = (1.0 - alpha) * down[1:] + beta * up[1:]
        nu[1:] = alpha * down[:-1] + (1.0 - beta) * up[:-1]
        down, up = nd, nu
    prob = down + up
    keep = prob > 0
    return (np.arange(n) - off)[keep], prob[keep]


@dataclass(frozen=True)
class MgfEval:
    theta_plus: float
    theta_minus: float
    a_plus: float
    a_minus: float
    discriminant: float


def mgf_eval(lam: float, alpha: float, beta: float, y0: int = -1) -> MgfEval:
    """Roots of ``theta^2 - S theta + (1 - alpha - beta)`` and the prefactors of ``E[lambda^{X_t}]``."""
    if not (lam > 0) or not math.isfinite(lam):
        raise ParameterError("lambda must be positive")
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise ParameterError("mgf needs 0 < alpha < 1 and 0 < beta < 1")
    if y0 not in (-1, 1):
        raise ParameterError("y0 must be -1 or +1")
    lam_ = np.longdouble(lam)
    a_, b_ = np.longdouble(alpha), np.longdouble(beta)
    prod = 1 - a_ - b_
    s = (1 - a_) / lam_ + (1 - b_) * lam_
    d = s * s - 4 * prod
    sq = np.sqrt(d)
    tp = (s + sq) / 2
    tm = prod / tp
    if y0 < 0:
        ap = (1 - a_ + lam_ * (lam_ * a_ - tm)) / (lam_ * lam_ * sq)
        am = 1 / lam_ - ap
    else:
        ap = ((1 - b_) * lam_ * lam_ + b_ - lam_ * tm) / sq
        am = lam_ - ap
    return MgfEval(tp, tm, ap, am, d)


def mgf_phi(lam: float, t: int, alpha: float, beta: float, y0: int = -1) -> float:
    """``E[lambda^{X_t}] = a+ theta+^t + a- theta-^t``."""
    if int(t) != t or t < 0:
        raise ParameterError("t must be a nonnegative integer")
    m = mgf_eval(lam, alpha, beta, y0)
    t = int(t)
    # evaluated in extended precision: theta+^t amplifies root rounding t-fold
    return float(m.a_plus * m.theta_plus**t + m.a_minus * m.theta_minus**t)


def lln_drift(ap: AsymParams) -> float:
    if ap.rho0 == 1.0:
        raise ParameterError("drift undefined when rho0 = 1")
    return -ap.r * ap.eta0 / (1.0 - ap.rho0)


def _clt_mean_tau(ap: AsymParams) -> float:
    tau = 0.5 * (ap.c0 + ap.c1)
    tau_bar = 0.5 * (ap.c1 - ap.c0)
    g = 1.0 - ap.rho0
    return 2.0 * ap.r * (-tau_bar / g + ap.eta0 * tau / g**2)


def _clt_mean_c(ap: AsymParams) -> float:
    c = ap.c0 + ap.c1
    c_bar = ap.c1 - ap.c0
    g = 1.0 - ap.rho0
    return ap.r * (-c_bar / g + ap.eta0 * c / g**2)


def clt_params(ap: AsymParams) -> tuple[float, float]:
    """Drift ``m`` and variance ``sigma^2`` per unit time of the diffusive limit."""
    if ap.rho0 == 1.0:
        raise ParameterError("diffusive limit undefined when rho0 = 1")
    m = _clt_mean_tau(ap)
    alt = _clt_mean_c(ap)
    assert math.isclose(m, alt, rel_tol=1e-12, abs_tol=1e-14), (m, alt)
    g = 1.0 - ap.rho0
    sigma2 = ap.r * (1.0 + ap.rho0) / g * (1.0 - ap.eta0**2 / g**2)
    return m, max(sigma2, 0.0)


def clt_shift_coefficient(ap: AsymParams) -> float:
    """``sqrt(r) eta0 / (1 - rho0)``: the centring is this times ``t / sqrt(dt)``."""
    return math.sqrt(ap.r) * ap.eta0 / (1.0 - ap.rho0)


def cubic_variance(r: float, c0: float) -> float:
    if not (c0 < 0):
        raise ParameterError("the near-alternating limit needs c0 < 0")
    if not (r > 0):
        raise ParameterError("r must be positive")
    return -r * c0


def order2_effective(c0: float, c1: float, p0: float, p1: float) -> tuple[float, float, float, float]:
    """``(v0, v1, c0', c1')`` with ``v_i = p_i / (1 - (1-p0)(1-p1))``."""
    for name, v in (("p0", p0), ("p1", p1)):
        if not (0.0 <= v <= 1.0):
            raise ParameterError(f"{name} must lie in [0, 1]")
    den = 1.0 - (1.0 - p0) * (1.0 - p1)
    if den == 0.0:
        raise ParameterError("order2_effective undefined for p0 = p1 = 0")
    v0, v1 = p0 / den, p1 / den
    return v0, v1, c0 * v0, c1 * v1


# --- jump counts and conditional laws ----------------------------------------------


def _check_t(t):
    if not (t >= 0) or not math.isfinite(t):
        raise ParameterError("t must be finite and nonnegative")


def _log_shape_integral(a: int, b: int, kappa: float) -> float:
    """log of ``int_{-1}^{1} (1-s)^a (1+s)^b e^{kappa s} ds``."""
    if kappa == 0.0:
        # Beta integral: 2^(a+b+1) B(a+1, b+1)
        return (a + b + 1) * math.log(2.0) + math.lgamma(a + 1) + math.lgamma(b + 1) - math.lgamma(a + b + 2)
    grid = np.linspace(-1.0, 1.0, 2001)[1:-1]
    with np.errstate(divide="ignore"):
        log_f = a * np.log1p(-grid) + b * np.log1p(grid) + kappa * grid
    # rescale so the integrand peaks at 1: the absolute tolerance is then relative
    peak = int(np.argmax(log_f))
    shift = float(log_f[peak])
    split = float(grid[peak])

    def f(s):
        with np.errstate(divide="ignore"):
            return np.exp(a * np.log1p(-s) + b * np.log1p(s) + kappa * s - shift)

    val = special.integrate(f, -1.0, split, tol=QUAD_TOL) + special.integrate(f, split, 1.0, tol=QUAD_TOL)
    return math.log(val) + shift


def _exponents(n: int) -> tuple[int, int]:
    """Powers of (t - z) and (t + z) in the conditional density given ``N_t = n``."""
    k = n // 2
    return (k - 1, k) if n % 2 == 0 else (k, k)


@lru_cache(maxsize=4096)
def _log_alpha(c0: float, c1: float, t: float, n: int) -> float:
    """log of ``int_{-t}^{t} (t-z)^a (t+z)^b e^{tau_bar z} dz`` for ``N_t = n``."""
    a, b = _exponents(n)
    tau_bar = 0.5 * (c1 - c0)
    return (a + b + 1) * math.log(t) + _log_shape_integral(a, b, tau_bar * t)


def log_prob_n(params: ItnParams, t: float, n: int) -> float:
    _check_t(t)
    if n < 0 or int(n) != n:
        raise ParameterError("n must be a nonnegative integer")
    n = int(n)
    c0, c1 = params.c0, params.c1
    if t == 0:
        return 0.0 if n == 0 else -math.inf
    if n == 0:
        return -c0 * t
    tau = 0.5 * (c0 + c1)
    k = n // 2
    la = _log_alpha(c0, c1, t, n)
    if n % 2 == 0:
        # (c0 c1)^k alpha_k / (2^(2k) k! (k-1)!)
        pre = k * math.log(c0 * c1) - 2 * k * math.log(2.0) - math.lgamma(k + 1) - math.lgamma(k)
    else:
        # c0^(k+1) c1^k alpha~_k / (2^(2k+1) (k!)^2)
        pre = (k + 1) * math.log(c0) + k * math.log(c1) - (2 * k + 1) * math.log(2.0) - 2 * math.lgamma(k + 1)
    return pre + la - tau * t


def prob_n(params: ItnParams, t: float, n: int) -> float:
    """``P(N_t = n)``."""
    return math.exp(log_prob_n(params, t, n))


def chi_constant(n: int) -> float:
    """Normaliser of the equal-rate conditional density: ``(2k+1)! / (2^(2k+1) (k!)^2)`` for ``n in {2k+1, 2k+2}``."""
    if n < 1:
        raise ParameterError("chi constants are defined for n >= 1")
    k = (n - 1) // 2
    return math.exp(math.lgamma(2 * k + 2) - (2 * k + 1) * math.log(2.0) - 2 * math.lgamma(k + 1))


def cond_density(params: ItnParams, t: float, n: int, z):
    """Density of ``Z_t`` given ``N_t = n`` (``n >= 1``), vectorised over ``z``."""
    _check_t(t)
    if n < 1 or int(n) != n:
        raise ParameterError("given N_t = 0 the law of Z_t is the atom at t, not a density")
    if not t > 0:
        raise ParameterError("t must be positive")
    n = int(n)
    z_arr = np.asarray(z, dtype=np.float64)
    if np.any(np.abs(z_arr) > t * (1 + 1e-12)):
        raise ParameterError("|z| must not exceed t")
    z_arr = np.clip(z_arr, -t, t)
    a, b = _exponents(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.log1p(-z_arr / t)
        hi = np.log1p(z_arr / t)
        shape = np.where(a > 0, a * lo, 0.0) + np.where(b > 0, b * hi, 0.0)
    if params.c0 == params.c1:
        # centred beta density with the chi constants
        val = chi_constant(n) * np.exp(shape) / t
    else:
        tau_bar = 0.5 * (params.c1 - params.c0)
        # alpha_n carries t^(a+b+1); the shape uses (1 -+ z/t) powers, hence the t^(a+b) factor
        log_norm = _log_alpha(params.c0, params.c1, t, n) - (a + b) * math.log(t)
        val = np.exp(shape + tau_bar * z_arr - log_norm)
    return float(val) if val.ndim == 0 else val


def poisson_tail_cutoff(rate_t: float, eps: float = 1e-12) -> int:
    """Smallest ``K`` with ``P(Poisson(rate_t) > K) <= eps``.

    Jump counts are dominated by a Poisson process of rate ``max(c0, c1)``, so
    this bounds the truncation error of sums over ``n``.
    """
    if rate_t <= 0:
        return 0
    log_p = -rate_t
    cdf = math.exp(log_p)
    k = 0
    while 1.0 - cdf > eps or k < rate_t:
        k += 1
        log_p += math.log(rate_t) - math.log(k)
        cdf += math.exp(log_p)
        if k > 10000:
            break
    # the float cdf saturates near 1: finish with a direct bound on the remaining tail
    tail = math.exp(log_p) * (k + 1) / (k + 1 - rate_t) if k + 1 > rate_t else 1.0
    while tail > eps:
        k += 1
        log_p += math.log(rate_t) - math.log(k)
        tail = math.exp(log_p) * (k + 1) / (k + 1 - rate_t)
    return k


# --- marginal law ------------------------------------------------------------------


def _check_x(t, x):
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x_arr) > t * (1 + 1e-12)):
        raise ParameterError("|x| must not exceed t")
    return np.clip(x_arr, -t, t)


def marginal_density(params: ItnParams, t: float, x):
    """``(atom, density)``: ``P(Z_t = t) = e^{-c0 t}`` and the density of ``Z_t`` on ``(-t, t)``.

    The density is ``e^{-tau t} f(t, x)`` with
    ``f = 1/2 [c0 c1 (t+x) I1(xi)/xi + c0 I0(xi)] e^{tau_bar x}`` and
    ``xi = sqrt(c0 c1 (t^2 - x^2))``; writing the first term through the entire
    function ``I1(xi)/xi`` removes the 0/0 at ``x = t``.
    """
    if not (t > 0):
        raise ParameterError("t must be positive")
    x_arr = _check_x(t, x)
    c0, c1 = params.c0, params.c1
    tau, tau_bar = params.tau, params.tau_bar
    xi = np.sqrt(c0 * c1 * np.maximum((t - x_arr) * (t + x_arr), 0.0))
    bracket = 0.5 * (c0 * c1 * (t + x_arr) * special.bessel_i1_over_x_e(xi) + c0 * special.bessel_i0e(xi))
    dens = bracket * np.exp(xi - tau * t + tau_bar * x_arr)
    atom = math.exp(-c0 * t)
    return atom, (float(dens) if np.ndim(dens) == 0 else dens)


def mixture_density(params: ItnParams, t: float, x, eps: float = 1e-12):
    """``sum_{n >= 1} P(N_t = n) f_n(x)``, truncated where the Poisson tail bound drops below ``eps``.

    Returns ``(value, K)`` with ``K`` the last count included.
    """
    K = poisson_tail_cutoff(max(params.c0, params.c1) * t, eps)
    x_arr = _check_x(t, x)
    total = np.zeros_like(x_arr)
    for n in range(1, K + 1):
        total = total + prob_n(params, t, n) * cond_density(params, t, n, x_arr)
    return total, K


def randomized_symmetric_density(c: float, p: float, t: float, x):
    """Law of ``eps Z_t / t`` for equal rates: ``(atom at +1, atom at -1, density on (-1, 1))``.

    The density is ``g(t, x) e^{-ct}`` with
    ``g = (c t / 2) [I0(c t sqrt(1-x^2)) + (1 + (2p-1) x) / sqrt(1-x^2) I1(c t sqrt(1-x^2))]``.
    """
    if not (c > 0 and t > 0):
        raise ParameterError("c and t must be positive")
    if not (0.0 <= p <= 1.0):
        raise ParameterError("p must lie in [0, 1]")
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x_arr) > 1 + 1e-12):
        raise ParameterError("|x| must not exceed 1")
    x_arr = np.clip(x_arr, -1.0, 1.0)
    ct = c * t
    xi = ct * np.sqrt(np.maximum((1 - x_arr) * (1 + x_arr), 0.0))
    g_scaled = 0.5 * ct * (special.bessel_i0e(xi) + (1 + (2 * p - 1) * x_arr) * ct * special.bessel_i1_over_x_e(xi))
    dens = g_scaled * np.exp(xi - ct)
    w = math.exp(-ct)
    return p * w, (1 - p) * w, (float(dens) if np.ndim(dens) == 0 else dens)


def parity_probs(params: ItnParams, t: float) -> tuple[float, float]:
    """``(P(N_t even), P(N_t odd))``; the odd mass is ``c0 sinh(tau t) e^{-tau t} / tau``."""
    _check_t(t)
    tau, tau_bar = params.tau, params.tau_bar
    one_minus = -math.expm1(-2.0 * tau * t)  # 1 - e^{-2 tau t}
    p_odd = params.c0 * one_minus / (2.0 * tau)
    p_even = (tau_bar * one_minus + tau * (2.0 - one_minus)) / (2.0 * tau)
    return p_even, p_odd


def mean_z(params: ItnParams, t: float) -> float:
    """``E[Z_t] = (tau_bar/tau) t + c0 (1 - e^{-2 tau t}) / (2 tau^2)``."""
    _check_t(t)
    tau, tau_bar = params.tau, params.tau_bar
    return tau_bar / tau * t - params.c0 * math.expm1(-2.0 * tau * t) / (2.0 * tau**2)


# --- Laplace transforms --------------------------------------------------------------


def _energy(params: ItnParams, mu: float) -> float:
    """``(mu - tau_bar)^2 + c0 c1``, the squared growth rate of the transforms."""
    return (mu - params.tau_bar) ** 2 + params.c0 * params.c1


def _damped_hyperbolics(params: ItnParams, t: float, mu: float):
    """``(sinh(t r)/r e^{-tau t}, cosh(t r) e^{-tau t})`` with ``r = sqrt(E)``."""
    r = math.sqrt(_energy(params, mu))
    tau = params.tau
    tr = t * r
    if tr < 1e-4:
        damp = math.exp(-tau * t)
        return t * (1.0 + tr * tr / 6.0) * damp, (1.0 + tr * tr / 2.0) * damp
    ep = math.exp((r - tau) * t)
    em = math.exp(-(r + tau) * t)
    return 0.5 * (ep - em) / r, 0.5 * (ep + em)


def laplace_parts(params: ItnParams, t: float, mu: float) -> tuple[float, float]:
    """``(E[e^{-mu Z_t}; N_t even], E[e^{-mu Z_t}; N_t odd])``."""
    _check_t(t)
    s, ch = _damped_hyperbolics(params, t, mu)
    return (params.tau_bar - mu) * s + ch, params.c0 * s


def laplace_full(params: ItnParams, t: float, mu: float) -> float:
    """``E[e^{-mu Z_t}] = [(tau - mu) sinh(t r)/r + cosh(t r)] e^{-tau t}``."""
    _check_t(t)
    s, ch = _damped_hyperbolics(params, t, mu)
    return (params.tau - mu) * s + ch


def time_laplace_abscissa(params: ItnParams, mu: float) -> float:
    """``F(mu, s)`` exists for ``s`` above this value."""
    return -params.tau + math.sqrt(_energy(params, mu))


def time_laplace_F(params: ItnParams, mu: float, s: float) -> float:
    """``int_0^inf e^{-s t} E[e^{-mu Z_t}] dt = (s + 2 tau - mu) / ((s + tau)^2 - E)``."""
    if not (s > time_laplace_abscissa(params, mu)):
        raise ParameterError(
            f"s = {s} is not above the convergence abscissa {time_laplace_abscissa(params, mu):.6g}"
        )
    tau = params.tau
    return (s + 2.0 * tau - mu) / ((s + tau) ** 2 - _energy(params, mu))


def time_laplace_F_symmetric(c: float, mu: float, s: float) -> float:
    """Equal-rate form ``(s + 2c - mu) / (s^2 + 2 s c - mu^2)``."""
    if not (s > -c + math.sqrt(mu * mu + c * c)):
        raise ParameterError("s is not above the convergence abscissa")
    return (s + 2.0 * c - mu) / (s * s + 2.0 * s * c - mu * mu)
