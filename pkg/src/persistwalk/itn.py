"""Integrated telegraph noise ``Z_t = int_0^t (-1)^{N_u} du`` with alternating rates.

The counting process ``N`` waits an exponential time of rate ``c0`` while its
value is even and rate ``c1`` while it is odd. Draw ``j`` of a stream gives the
inter-arrival ``e_{j+1} = -ln(U_j) / rate``. A path stores only its jump times;
``Z`` is the alternating sum of segment lengths, starting with slope +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import HorizonError, ParameterError

_JUMP_BLOCK = 32


@dataclass(frozen=True)
class ItnParams:
    c0: float
    c1: float

    def __post_init__(self):
        if not (self.c0 > 0 and self.c1 > 0) or not (math.isfinite(self.c0) and math.isfinite(self.c1)):
            raise ParameterError(f"ITN rates must be positive and finite, got ({self.c0}, {self.c1})")

    def swapped(self) -> ItnParams:
        return ItnParams(self.c1, self.c0)

    @property
    def tau(self) -> float:
        return 0.5 * (self.c0 + self.c1)

    @property
    def tau_bar(self) -> float:
        return 0.5 * (self.c1 - self.c0)


@dataclass(frozen=True)
class ItnState:
    """Position ``z`` and jump count ``n`` after elapsed time ``t``."""

    z: float
    n: int
    t: float

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ParameterError("jump count must be a nonnegative integer")
        if self.t < 0 or abs(self.z) > self.t * (1 + 1e-12) + 1e-300:
            raise ParameterError(f"|z| <= t violated: z={self.z}, t={self.t}")


@dataclass(frozen=True)
class ItnPath:
    jump_times: np.ndarray
    horizon: float
    _knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=np.float64)
        if not (self.horizon > 0):
            raise ParameterError("horizon must be positive")
        if jt.size and (np.any(np.diff(jt) <= 0) or jt[0] <= 0 or jt[-1] > self.horizon):
            raise ParameterError("jump times must be strictly increasing inside (0, horizon]")
        object.__setattr__(self, "jump_times", jt)
        # z at each jump time, the prefix-sum cache used by eval_z
        seg = np.diff(np.concatenate([[0.0], jt]))
        sign = np.where(np.arange(jt.size) % 2 == 0, 1.0, -1.0)
        object.__setattr__(self, "_knots", np.concatenate([[0.0], np.cumsum(sign * seg)]))

    def eval_z(self, t):
        return eval_z(self, t)


def eval_z(path: ItnPath, t):
    """``(z, n)`` at time ``t``: ``n`` counts jumps in ``[0, t]``."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(t_arr > path.horizon):
        raise HorizonError(f"evaluation time outside [0, {path.horizon}]")
    n = np.searchsorted(path.jump_times, t_arr, side="right")
    last = np.concatenate([[0.0], path.jump_times])[n]
    z = path._knots[n] + np.where(n % 2 == 0, 1.0, -1.0) * (t_arr - last)
    if t_arr.ndim == 0:
        return float(z), int(n)
    return z, n


def _interarrival(u, first_index, params: ItnParams):
    """Inter-arrivals for draws ``first_index, first_index+1, ...`` along the last axis."""
    k = first_index + np.arange(u.shape[-1])
    rate = np.where(k % 2 == 0, params.c0, params.c1)
    return -np.log(u) / rate


def sample_jumps(params: ItnParams, horizon: float, stream: rng.RngSpec, offset: int = 0) -> ItnPath:
    """Exact jump times on ``(0, horizon]``; ``offset`` skips leading draws of the stream."""
    if not (horizon > 0):
        raise ParameterError("horizon must be positive")
    times = []
    clock = 0.0
    pos = 0
    while True:
        u = rng.uniform(stream, _JUMP_BLOCK, start=offset + pos)
        e = _interarrival(u, pos, params)
        cs = clock + np.cumsum(e)
        inside = cs <= horizon
        times.append(cs[inside])
        if not inside.all():
            break
        clock = float(cs[-1])
        pos += _JUMP_BLOCK
    return ItnPath(np.concatenate(times), horizon)


@dataclass(frozen=True)
class RestartPath:
    """Continuation of ``(Z, N)`` from ``origin``, valid for elapsed times in ``[0, horizon]``."""

    origin: ItnState
    tail: ItnPath

    def eval(self, t):
        z, n = eval_z(self.tail, t)
        sign = 1.0 if self.origin.n % 2 == 0 else -1.0
        return self.origin.z + sign * z, self.origin.n + n


def markov_restart(state: ItnState, params: ItnParams, horizon: float, stream: rng.RngSpec) -> RestartPath:
    """Continue from ``state``: fresh rates ``(c0, c1)`` with slope +1 after an even
    count, ``(c1, c0)`` with slope -1 after an odd count."""
    rates = params if state.n % 2 == 0 else params.swapped()
    return RestartPath(state, sample_jumps(rates, horizon, stream))


def sample_randomized_symmetric(c: float, p: float, t: float, stream: rng.RngSpec) -> float:
    """``eps * Z_t / t`` for equal rates ``c`` and an independent sign with ``P(eps=+1) = p``.

    Draw 0 of the stream chooses the sign, draws 1, 2, ... the jump times.
    """
    if not (c > 0):
        raise ParameterError("rate must be positive")
    if not (0.0 <= p <= 1.0):
        raise ParameterError("p must lie in [0, 1]")
    if not (t > 0):
        raise ParameterError("t must be positive")
    eps = 1.0 if rng.uniform(stream, 1)[0] < p else -1.0
    z, _ = eval_z(sample_jumps(ItnParams(c, c), t, stream, offset=1), t)
    return eps * z / t


# --- ensembles ---------------------------------------------------------------------


@dataclass(frozen=True)
class ItnEnsemble:
    """``z[i, j]`` and ``n[i, j]`` for path ``i`` at ``times[j]``; ``first_jump[i]`` is ``inf`` if beyond the horizon."""

    times: np.ndarray
    z: np.ndarray
    n: np.ndarray
    first_jump: np.ndarray


def _z_from_jumps(jumps, times):
    """Vectorised eval_z over a padded jump-time matrix (rows sorted, +inf padding)."""
    m, w = jumps.shape
    starts = np.concatenate([np.zeros((m, 1)), jumps], axis=1)
    ends = np.concatenate([jumps, np.full((m, 1), np.inf)], axis=1)
    sign = np.where(np.arange(w + 1) % 2 == 0, 1.0, -1.0)
    z = np.empty((m, times.size))
    n = np.empty((m, times.size), dtype=np.int64)
    for j, t in enumerate(times):
        seg = np.minimum(ends, t) - np.minimum(starts, t)
        z[:, j] = seg @ sign
        n[:, j] = np.count_nonzero(jumps <= t, axis=1)
    return z, n


def itn_ensemble(params: ItnParams, times, n_paths: int, seed: int, chunk: int = 2048) -> ItnEnsemble:
    """Marginals of many paths; row ``i`` matches ``sample_jumps(..., RngSpec(seed, i))``."""
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or np.any(times < 0):
        raise ParameterError("times must be a 1-d array of nonnegative values")
    horizon = float(times.max()) if times.size else 0.0
    z = np.empty((n_paths, times.size))
    n = np.empty((n_paths, times.size), dtype=np.int64)
    first = np.empty(n_paths)
    # expected jump count to the horizon, with slack
    block = int(min(max(8, 2 * max(params.c0, params.c1) * horizon + 8), 1024))
    for paths in rng.path_chunks(n_paths, chunk):
        m = len(paths)
        streams = np.arange(paths.start, paths.stop, dtype=np.uint64)
        cols = []
        clock = np.zeros(m)
        pos = 0
        while np.any(clock <= horizon):
            u = rng.uniform_block(seed, streams, pos, block)
            cs = clock[:, None] + np.cumsum(_interarrival(u, pos, params), axis=1)
            cols.append(cs)
            clock = cs[:, -1]
            pos += block
        jumps = np.concatenate(cols, axis=1)
        jumps[jumps > horizon] = np.inf
        z[paths.start : paths.stop], n[paths.start : paths.stop] = _z_from_jumps(jumps, times)
        first[paths.start : paths.stop] = jumps[:, 0]
    return ItnEnsemble(times, z, n, first)


@dataclass(frozen=True)
class CtmcEnsemble:
    """Integrals ``int_0^t R_s ds`` of a continuous-time chain at ``times``, plus its first holding times."""

    times: np.ndarray
    integral: np.ndarray
    first_hold: np.ndarray


def ctmc_integral_ensemble(rates, values, start: int, times, n_paths: int, seed: int) -> CtmcEnsemble:
    """Continuous-time chain with off-diagonal rates ``rates[j][l]``.

    Each sojourn uses two draws of the path's stream: draw ``2i`` is the holding
    time (mean ``1 / sum_l rates[j][l]``), draw ``2i+1`` chooses the next state
    with probabilities ``rates[j][l] / sum_l rates[j][l]``.
    """
    c = np.asarray(rates, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    k = vals.size
    if c.shape != (k, k) or np.any(np.diag(c) != 0) or np.any(c < 0):
        raise ParameterError("rates must be a k x k nonnegative matrix with zero diagonal")
    exit_rate = c.sum(axis=1)
    if np.any(exit_rate <= 0):
        raise ParameterError("every state needs a positive exit rate")
    jump_cdf = np.cumsum(c / exit_rate[:, None], axis=1)
    jump_cdf[:, -1] = np.inf
    times = np.asarray(times, dtype=np.float64)
    horizon = float(times.max())
    out = np.empty((n_paths, times.size))
    first = np.empty(n_paths)
    for paths in rng.path_chunks(n_paths, 4096):
        m = len(paths)
        cursor = rng.StreamCursor(seed, np.arange(paths.start, paths.stop, dtype=np.uint64))
        state = np.full(m, start, dtype=np.int64)
        clock = np.zeros(m)
        acc = np.zeros((m, times.size))
        hold0 = None
        while np.any(clock < horizon):
            u = cursor.take(2)
            hold = -np.log(u[:, 0]) / exit_rate[state]
            if hold0 is None:
                hold0 = hold
            end = clock + hold
            # contribution of this sojourn to each observation time
            acc += vals[state][:, None] * (np.minimum(end[:, None], times) - np.minimum(clock[:, None], times))
            nxt = np.argmax(u[:, 1][:, None] < jump_cdf[state], axis=1)
            clock = end
            state = nxt
        out[paths.start : paths.stop] = acc
        first[paths.start : paths.stop] = hold0
    return CtmcEnsemble(times, out, first)
