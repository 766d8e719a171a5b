"""Telegraph equation ``w_tt + 2c w_t = a^2 w_xx`` with ``w(x,0) = f``, ``w_t(x,0) = 0``.

Three independent routes to the solution:

* Monte Carlo: ``w(x,t) = E[u(x, Z_t)]`` where ``u(x,s) = (f(x+as) + f(x-as))/2``
  is the wave solution and ``Z`` the equal-rate telegraph noise;
* the closed-form time factor of a plane wave ``cos(kx) g(t)``;
* an explicit central-difference scheme on a periodic grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StabilityError
from .itn import ItnParams, itn_ensemble

ANALYTIC_KINDS = ("plane_wave", "gaussian", "constant", "linear")


@dataclass(frozen=True)
class InitialData:
    """Initial profile ``f``.

    kinds and their parameters:
      plane_wave: ``k`` (``f = cos(kx)``); gaussian: ``center``, ``width``;
      constant: ``value``; linear: ``slope``, ``intercept``;
      tabulated: ``grid``, ``values`` (periodic linear interpolation, FD only).
    """

    kind: str
    params: dict
    wave_speed: float = 1.0

    def __post_init__(self):
        if self.kind not in ANALYTIC_KINDS + ("tabulated",):
            raise ParameterError(f"unknown initial-data kind {self.kind!r}")
        if not (self.wave_speed > 0):
            raise ParameterError("wave speed must be positive")
        need = {
            "plane_wave": ("k",),
            "gaussian": ("center", "width"),
            "constant": ("value",),
            "linear": ("slope", "intercept"),
            "tabulated": ("grid", "values"),
        }[self.kind]
        missing = [n for n in need if n not in self.params]
        if missing:
            raise ParameterError(f"{self.kind} initial data needs {', '.join(missing)}")
        if self.kind == "gaussian" and not self.params["width"] > 0:
            raise ParameterError("gaussian width must be positive")
        if self.kind == "tabulated":
            g = np.asarray(self.params["grid"], dtype=np.float64)
            v = np.asarray(self.params["values"], dtype=np.float64)
            if g.ndim != 1 or g.shape != v.shape or g.size < 2 or np.any(np.diff(g) <= 0):
                raise ParameterError("tabulated data needs matching increasing grid and values")

    @classmethod
    def plane_wave(cls, k: float, a: float = 1.0) -> InitialData:
        return cls("plane_wave", {"k": float(k)}, a)

    @classmethod
    def gaussian(cls, center: float, width: float, a: float = 1.0) -> InitialData:
        return cls("gaussian", {"center": float(center), "width": float(width)}, a)

    @classmethod
    def constant(cls, value: float, a: float = 1.0) -> InitialData:
        return cls("constant", {"value": float(value)}, a)

    @classmethod
    def linear(cls, slope: float, intercept: float = 0.0, a: float = 1.0) -> InitialData:
        return cls("linear", {"slope": float(slope), "intercept": float(intercept)}, a)

    @classmethod
    def tabulated(cls, grid, values, a: float = 1.0) -> InitialData:
        return cls("tabulated", {"grid": tuple(grid), "values": tuple(values)}, a)

    @property
    def analytic(self) -> bool:
        return self.kind in ANALYTIC_KINDS

    def bound(self) -> float:
        """sup |f|, infinite for linear data."""
        p = self.params
        if self.kind == "plane_wave":
            return 1.0
        if self.kind == "gaussian":
            return 1.0
        if self.kind == "constant":
            return abs(p["value"])
        if self.kind == "linear":
            return 0.0 if p["slope"] == 0 else math.inf
        return float(np.max(np.abs(p["values"])))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        p = self.params
        if self.kind == "plane_wave":
            return np.cos(p["k"] * x)
        if self.kind == "gaussian":
            return np.exp(-0.5 * ((x - p["center"]) / p["width"]) ** 2)
        if self.kind == "constant":
            return np.full_like(x, p["value"])
        if self.kind == "linear":
            return p["slope"] * x + p["intercept"]
        g = np.asarray(p["grid"])
        v = np.asarray(p["values"])
        return np.interp(x, g, v, period=g[-1] - g[0] + (g[1] - g[0]))


def dalembert_u(f: InitialData, x, t, a: float | None = None):
    """Wave solution ``(f(x + a t) + f(x - a t)) / 2``; ``a`` defaults to ``f.wave_speed``."""
    if not f.analytic:
        raise ParameterError("the wave solution needs analytic initial data")
    a = f.wave_speed if a is None else a
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    return 0.5 * (f(x + a * t) + f(x - a * t))


def _estimates(values):
    """Mean and standard error along axis 0."""
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n < 2:
        return mean, np.full_like(mean, np.nan)
    sd = values.std(axis=0, ddof=1)
    return mean, sd / math.sqrt(n)


def _itn_positions(c0, c1, t, n_paths, seed):
    if t < 0:
        raise ParameterError("t must be nonnegative")
    if t == 0:
        return np.zeros(n_paths), np.zeros(n_paths, dtype=np.int64)
    ens = itn_ensemble(ItnParams(c0, c1), [t], n_paths, seed)
    return ens.z[:, 0], ens.n[:, 0]


def mc_telegraph(f: InitialData, a: float, c: float, x, t: float, n_paths: int, seed: int):
    """Monte Carlo ``E[u(x, Z_t)]`` with ``Z`` of equal rates ``c``; returns ``(estimate, se)``."""
    if not (c > 0):
        raise ParameterError("damping c must be positive")
    if n_paths < 2:
        raise ParameterError("need at least two paths")
    x = np.asarray(x, dtype=np.float64)
    if t == 0:
        # Z_0 = 0 on every path: the estimate is f itself, with no sampling error
        exact = np.asarray(f(x), dtype=np.float64)
        return (float(exact), 0.0) if x.ndim == 0 else (exact, np.zeros_like(exact))
    z, _ = _itn_positions(c, c, t, n_paths, seed)
    vals = dalembert_u(f, x[None, ...] if x.ndim else x, z.reshape((-1,) + (1,) * x.ndim), a)
    est, se = _estimates(vals)
    if x.ndim == 0:
        return float(est), float(se)
    return est, se


def mc_telegraph_split(f: InitialData, a: float, c0: float, c1: float, x, t: float, n_paths: int, seed: int):
    """``(w_e, w_o, se_e, se_o)``: ``E[u(x, Z_t); N_t even]`` and ``E[u(x, Z_t); N_t odd]``."""
    if not (c0 > 0 and c1 > 0):
        raise ParameterError("rates must be positive")
    if n_paths < 2:
        raise ParameterError("need at least two paths")
    x = np.asarray(x, dtype=np.float64)
    if t == 0:
        exact = np.asarray(f(x), dtype=np.float64)
        zero = np.zeros_like(exact)
        if x.ndim == 0:
            return float(exact), 0.0, 0.0, 0.0
        return exact, zero, zero.copy(), zero.copy()
    z, n = _itn_positions(c0, c1, t, n_paths, seed)
    shape = (-1,) + (1,) * x.ndim
    u = dalembert_u(f, x[None, ...] if x.ndim else x, z.reshape(shape), a)
    even = (n % 2 == 0).reshape(shape)
    we, se_e = _estimates(np.where(even, u, 0.0))
    wo, se_o = _estimates(np.where(even, 0.0, u))
    if x.ndim == 0:
        return float(we), float(wo), float(se_e), float(se_o)
    return we, wo, se_e, se_o


# --- plane-wave closed form ------------------------------------------------------


def _damped_pair(c: float, w2: float, t: float):
    """``(e^{-ct} C(t), e^{-ct} S(t))`` with ``C = cosh(wt)``, ``S = sinh(wt)/w`` for ``w^2 = w2``
    (``cos``/``sin`` analogues when ``w2 < 0``, ``(1, t)`` when ``w2 = 0``)."""
    if abs(w2) * t * t < 1e-10:
        # confluent branch and its neighbourhood: Taylor in w2 t^2
        q = w2 * t * t
        damp = math.exp(-c * t)
        return damp * (1.0 + q / 2.0 + q * q / 24.0), damp * t * (1.0 + q / 6.0 + q * q / 120.0)
    if w2 > 0:
        w = math.sqrt(w2)
        ep = math.exp((w - c) * t)
        em = math.exp(-(w + c) * t)
        return 0.5 * (ep + em), 0.5 * (ep - em) / w
    nu = math.sqrt(-w2)
    damp = math.exp(-c * t)
    return damp * math.cos(nu * t), damp * math.sin(nu * t) / nu


def plane_wave_derivatives(k: float, a: float, c: float, t: float) -> tuple[float, float, float]:
    """``(g, g', g'')`` for ``g'' + 2c g' + a^2 k^2 g = 0``, ``g(0) = 1``, ``g'(0) = 0``."""
    if t < 0:
        raise ParameterError("t must be nonnegative")
    s2 = (a * k) ** 2
    dc, ds = _damped_pair(c, c * c - s2, t)
    return dc + c * ds, -s2 * ds, -s2 * (dc - c * ds)


def plane_wave_oracle(k: float, a: float, c: float, t: float) -> float:
    """Time factor ``g(t)`` of the telegraph solution ``cos(kx) g(t)`` started from ``cos(kx)``."""
    return plane_wave_derivatives(k, a, c, t)[0]


# --- finite differences ---------------------------------------------------------------


@dataclass(frozen=True)
class FdGrid:
    """Periodic grid ``x_j = x_min + j dx`` (``j < nx``, ``dx = (x_max - x_min)/nx``), ``nt`` steps of ``dt``."""

    x_min: float
    x_max: float
    nx: int
    dt: float
    nt: int

    def __post_init__(self):
        if not (self.x_max > self.x_min):
            raise ParameterError("need x_max > x_min")
        if self.nx < 3 or self.nt < 0:
            raise ParameterError("need nx >= 3 and nt >= 0")
        if not (self.dt > 0):
            raise ParameterError("dt must be positive")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)


@dataclass(frozen=True)
class FdSolution:
    x: np.ndarray
    t: np.ndarray
    w: np.ndarray  # shape (nt + 1, nx)


def fd_telegraph(f: InitialData, a: float, c: float, grid: FdGrid) -> FdSolution:
    """Explicit leapfrog scheme, damping treated centrally.

    ``w^{n+1} (1 + c dt) = 2 w^n - (1 - c dt) w^{n-1} + dt^2 a^2 D_xx w^n``, started with
    ``w^1 = w^0 + (dt^2 / 2) a^2 D_xx w^0 / (1 + c dt)``.
    """
    if not (a > 0) or c < 0:
        raise ParameterError("need a > 0 and c >= 0")
    courant = a * grid.dt / grid.dx
    if courant > 1.0 + 1e-12:
        raise StabilityError(f"CFL violated: a dt / dx = {courant:.4f} > 1")
    x = grid.x()
    w = np.empty((grid.nt + 1, grid.nx))
    w[0] = f(x)
    lam2 = courant * courant

    def lap(v):
        # dt^2 a^2 D_xx v
        return lam2 * (np.roll(v, -1) - 2.0 * v + np.roll(v, 1))

    if grid.nt >= 1:
        w[1] = w[0] + 0.5 * lap(w[0]) / (1.0 + c * grid.dt)
    den = 1.0 + c * grid.dt
    back = 1.0 - c * grid.dt
    for n in range(1, grid.nt):
        w[n + 1] = (2.0 * w[n] - back * w[n - 1] + lap(w[n])) / den
    return FdSolution(x, grid.t(), w)


def fd_plane_wave_error(k: float, a: float, c: float, t_end: float, nx: int, courant: float = 0.5) -> float:
    """Max error of the FD solution from ``cos(kx)`` on one period, at ``t_end``."""
    length = 2.0 * math.pi / abs(k)
    dx = length / nx
    nt = max(1, int(round(t_end / (courant * dx / a))))
    dt = t_end / nt
    sol = fd_telegraph(InitialData.plane_wave(k, a), a, c, FdGrid(0.0, length, nx, dt, nt))
    exact = np.cos(k * sol.x) * plane_wave_oracle(k, a, c, t_end)
    return float(np.max(np.abs(sol.w[-1] - exact)))


def observed_order(errors, sizes) -> float:
    """Least-squares slope of ``log error`` against ``-log size`` (sizes are grid counts)."""
    e = np.log(np.asarray(errors, dtype=np.float64))
    h = -np.log(np.asarray(sizes, dtype=np.float64))
    return float(np.polyfit(h, e, 1)[0])
