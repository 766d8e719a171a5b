"""Discrete persistent walks: the two-state chain, k-state and order-2 variants.

Draw conventions (all keyed by ``(seed, stream)``, see :mod:`persistwalk.rng`):

* stepwise two-state chain: draw ``j`` decides the move from ``y_j`` to ``y_{j+1}``;
  the sign flips when the draw is below the flip probability of ``y_j``;
* skip-ahead: draw ``j`` gives the length of run ``j`` between sign changes;
* k-state and order-2 chains: draw ``j`` picks the next state by inverting the
  cumulative transition row.

Ensemble functions give path ``i`` the stream ``i``, so every row of an
ensemble is bit-identical to the single-path simulator run with that stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import HorizonError, ParameterError

ORDER2_STATES = ((-1, -1), (-1, 1), (1, -1), (1, 1))

_TIME_BLOCK = 256
_PATH_CHUNK = 4096


def _check_sign(v, name):
    if v not in (-1, 1):
        raise ParameterError(f"{name} must be -1 or +1, got {v!r}")


def _check_steps(T):
    if int(T) != T or T < 0:
        raise ParameterError(f"step count must be a nonnegative integer, got {T!r}")
    return int(T)


@dataclass(frozen=True)
class WalkParams:
    """Two-state chain on {-1, +1}: ``alpha = P(-1 -> +1)``, ``beta = P(+1 -> -1)``."""

    alpha: float
    beta: float
    y0: int = -1

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ParameterError(f"{name} must lie in [0, 1], got {v!r}")
        _check_sign(self.y0, "y0")

    def flip_probability(self, y: int) -> float:
        return self.alpha if y < 0 else self.beta

    def replace(self, **kw) -> WalkParams:
        d = {"alpha": self.alpha, "beta": self.beta, "y0": self.y0}
        d.update(kw)
        return WalkParams(**d)


@dataclass(frozen=True)
class KStateParams:
    """Chain on ``values`` with off-diagonal transition probabilities ``c[i][j] * delta_t``."""

    values: tuple
    c: tuple
    delta_t: float

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        rates = np.asarray(self.c, dtype=np.float64)
        k = len(vals)
        if k < 2:
            raise ParameterError("a k-state chain needs at least two values")
        if rates.shape != (k, k):
            raise ParameterError(f"rate matrix must be {k}x{k}, got shape {rates.shape}")
        if not (self.delta_t > 0):
            raise ParameterError("delta_t must be positive")
        if np.any(np.diag(rates) != 0):
            raise ParameterError("rate matrix must have a zero diagonal")
        if np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise ParameterError("rates must be finite and nonnegative")
        out = rates.sum(axis=1)
        if np.any(out <= 0):
            raise ParameterError("every state needs a positive total exit rate")
        if np.any(rates * self.delta_t > 1) or np.any(out * self.delta_t >= 1):
            raise ParameterError("delta_t too large: need c(i,j)*dt <= 1 and sum_l c(i,l)*dt < 1")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "c", tuple(tuple(float(v) for v in row) for row in rates))

    @property
    def k(self) -> int:
        return len(self.values)

    def rate_matrix(self) -> np.ndarray:
        return np.array(self.c, dtype=np.float64)

    def exit_rates(self) -> np.ndarray:
        return self.rate_matrix().sum(axis=1)

    def transition_matrix(self) -> np.ndarray:
        p = self.rate_matrix() * self.delta_t
        np.fill_diagonal(p, 1.0 - p.sum(axis=1))
        return p


@dataclass(frozen=True)
class Order2Params:
    """Order-2 chain on {-1, +1}, driven through the pair chain on ``ORDER2_STATES``."""

    c0: float
    c1: float
    p0: float
    p1: float
    delta_t: float

    def __post_init__(self):
        if not (self.c0 > 0 and self.c1 > 0):
            raise ParameterError("c0 and c1 must be positive")
        if not (self.delta_t > 0):
            raise ParameterError("delta_t must be positive")
        if not (self.c0 * self.delta_t < 1 and self.c1 * self.delta_t < 1):
            raise ParameterError("need c0*dt < 1 and c1*dt < 1")
        # p = 1 is admitted: it is the deterministic boundary of the matrix rows
        for name in ("p0", "p1"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ParameterError(f"{name} must lie in (0, 1], got {v!r}")

    def transition_matrix(self) -> np.ndarray:
        a, b = self.c0 * self.delta_t, self.c1 * self.delta_t
        return np.array(
            [
                [1 - a, a, 0, 0],
                [0, 0, 1 - self.p0, self.p0],
                [self.p1, 1 - self.p1, 0, 0],
                [0, 0, b, 1 - b],
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class LatticePath:
    """Increments ``y[0..T]`` and partial sums ``x[t] = y[0] + ... + y[t]``.

    Two-state and integer-valued chains store ``y`` as int8 and ``x`` as int64;
    real-valued k-state chains also keep the int8 state indices in ``states``.
    """

    y: np.ndarray
    x: np.ndarray
    states: np.ndarray | None = field(default=None, repr=False)

    @property
    def T(self) -> int:
        return self.y.size - 1

    @classmethod
    def from_increments(cls, y, states=None) -> LatticePath:
        y = np.asarray(y)
        acc = np.int64 if np.issubdtype(y.dtype, np.integer) else np.float64
        return cls(y, np.cumsum(y, dtype=acc), states)


@dataclass(frozen=True)
class RescaledPath:
    """Lattice path seen at space scale ``dx`` and time scale ``dt``."""

    base: LatticePath
    dx: float
    dt: float

    def __post_init__(self):
        if not (self.dx > 0 and self.dt > 0):
            raise ParameterError("dx and dt must be positive")

    @property
    def horizon(self) -> float:
        return self.base.T * self.dt

    def eval_interpolated(self, s):
        return eval_interpolated(self, s)


def eval_interpolated(path: RescaledPath, s):
    """Linear interpolation of ``dx * x_k`` placed at times ``k * dt``."""
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0) or np.any(s_arr > path.horizon * (1 + 1e-12)):
        raise HorizonError(f"evaluation time outside [0, {path.horizon}]")
    x = path.base.x
    u = s_arr / path.dt
    k = np.minimum(np.floor(u).astype(np.int64), path.base.T)
    frac = u - k
    nxt = np.minimum(k + 1, path.base.T)
    val = path.dx * (x[k] + frac * (x[nxt] - x[k]))
    return float(val) if val.ndim == 0 else val


# --- two-state chain ----------------------------------------------------------


def simulate_order1(params: WalkParams, T: int, stream: rng.RngSpec) -> LatticePath:
    """Exact stepwise simulation of the two-state chain."""
    T = _check_steps(T)
    u = rng.uniform(stream, T)
    y = np.empty(T + 1, dtype=np.int8)
    y[0] = params.y0
    cur = params.y0
    a, b = params.alpha, params.beta
    for j in range(T):
        if u[j] < (a if cur < 0 else b):
            cur = -cur
        y[j + 1] = cur
    return LatticePath.from_increments(y)


def geometric_runs(u, p):
    """Run lengths ``ceil(ln U / ln(1-p))`` >= 1 by inversion, ``0 < p < 1``."""
    u = np.asarray(u, dtype=np.float64)
    a = np.ceil(np.log(u) / np.log1p(-np.asarray(p, dtype=np.float64)))
    return np.maximum(a, 1.0)


def _check_interior(params: WalkParams):
    if not (0.0 < params.alpha < 1.0 and 0.0 < params.beta < 1.0):
        raise ParameterError("skip-ahead simulation needs 0 < alpha < 1 and 0 < beta < 1")


def skipahead_runs(params: WalkParams, T: int, stream: rng.RngSpec) -> np.ndarray:
    """Run lengths ``A_1, A_2, ...`` until their sum exceeds ``T`` (int64)."""
    _check_interior(params)
    T = _check_steps(T)
    p_first = params.flip_probability(params.y0)
    p_second = params.flip_probability(-params.y0)
    runs = []
    total = 0
    pos = 0
    block = 64
    while total <= T:
        u = rng.uniform(stream, block, start=pos)
        p = np.where((np.arange(pos, pos + block) % 2) == 0, p_first, p_second)
        a = np.minimum(geometric_runs(u, p), T + 1).astype(np.int64)
        csum = total + np.cumsum(a)
        stop = int(np.searchsorted(csum, T, side="right"))
        if stop < block:
            runs.append(a[: stop + 1])
            break
        runs.append(a)
        total = int(csum[-1])
        pos += block
    return np.concatenate(runs)


def simulate_order1_skipahead(params: WalkParams, T: int, stream: rng.RngSpec) -> LatticePath:
    """Same law as :func:`simulate_order1`, built from geometric run lengths."""
    runs = skipahead_runs(params, T, stream)
    signs = params.y0 * np.where(np.arange(runs.size) % 2 == 0, 1, -1).astype(np.int8)
    y = np.repeat(signs, runs)[: T + 1].astype(np.int8)
    return LatticePath.from_increments(y)


def sign_change_times(path: LatticePath) -> np.ndarray:
    """Rows ``(T_k, A_k)``: times ``t >= 1`` with ``y_t != y_{t-1}`` and their gaps."""
    y = np.asarray(path.y)
    if np.unique(y).size > 2:
        raise ParameterError("sign change times need a two-state path")
    times = np.flatnonzero(y[1:] != y[:-1]).astype(np.int64) + 1
    holds = np.diff(np.concatenate([[0], times]))
    return np.column_stack([times, holds])


def reconstruct_from_sign_changes(changes, y0: int, T: int) -> np.ndarray:
    """Partial sums ``x_0..x_T`` from sign-change times of a {-1,+1} path.

    With ``k = N_t`` changes up to time ``t`` and ``y0 = -1``,
    ``x_t = sum_j (-1)^j A_j + (-1)^(k+1) (t - T_k + 1)``; a ``+1`` start
    negates everything.
    """
    _check_sign(y0, "y0")
    changes = np.asarray(changes, dtype=np.int64).reshape(-1, 2)
    times, holds = changes[:, 0], changes[:, 1]
    t = np.arange(T + 1, dtype=np.int64)
    k = np.searchsorted(times, t, side="right")
    alt = np.where(np.arange(1, times.size + 1) % 2 == 0, 1, -1) * holds
    prefix = np.concatenate([[0], np.cumsum(alt)])
    last = np.concatenate([[0], times])[k]
    tail_sign = np.where(k % 2 == 0, -1, 1)
    x = prefix[k] + tail_sign * (t - last + 1)
    return -y0 * x


# --- k-state and order-2 chains ----------------------------------------------------


def _cumulative_rows(p: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p, axis=1)
    cum[:, -1] = np.inf  # absorbs rounding in the last column
    return cum


def _next_state(cum_rows, state, u):
    row = cum_rows[state]
    # first column whose cumulative mass exceeds u; zero-probability states are skipped
    return np.argmax(u[..., None] < row, axis=-1).astype(np.int8)


def simulate_kstate(params: KStateParams, T: int, stream: rng.RngSpec, start: int = 0) -> LatticePath:
    """Chain on ``params.values`` started in state index ``start``."""
    T = _check_steps(T)
    if not 0 <= start < params.k:
        raise ParameterError(f"start index must be in [0, {params.k})")
    cum = _cumulative_rows(params.transition_matrix())
    u = rng.uniform(stream, T)
    states = np.empty(T + 1, dtype=np.int8)
    states[0] = start
    cur = start
    for j in range(T):
        cur = int(np.argmax(u[j] < cum[cur]))
        states[j + 1] = cur
    vals = np.asarray(params.values)
    if np.all(vals == np.round(vals)) and np.all(np.abs(vals) < 128):
        y = vals[states].astype(np.int8)
    else:
        y = vals[states]
    return LatticePath.from_increments(y, states)


def order2_state_index(y0: int, y1: int) -> int:
    _check_sign(y0, "y0")
    _check_sign(y1, "y1")
    return ORDER2_STATES.index((y0, y1))


def simulate_order2(params: Order2Params, T: int, y0: int, y1: int, stream: rng.RngSpec) -> LatticePath:
    """Order-2 chain with given ``(y_0, y_1)``; draw ``j`` moves the pair to ``(y_{j+1}, y_{j+2})``."""
    T = _check_steps(T)
    pair = order2_state_index(y0, y1)
    if T == 0:
        return LatticePath.from_increments(np.array([y0], dtype=np.int8))
    cum = _cumulative_rows(params.transition_matrix())
    u = rng.uniform(stream, T - 1)
    y = np.empty(T + 1, dtype=np.int8)
    y[0], y[1] = y0, y1
    for j in range(T - 1):
        pair = int(np.argmax(u[j] < cum[pair]))
        y[j + 2] = ORDER2_STATES[pair][1]
    return LatticePath.from_increments(y)


# --- ensembles -----------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleResult:
    """Partial sums ``x`` at the requested lattice indices, one row per path.

    ``first_change`` is the first ``t >= 1`` with ``y_t != y_0`` (``T + 1`` when
    the path never leaves its initial value); ``changes`` counts the times
    ``1 <= t <= T`` with ``y_t != y_{t-1}``.
    """

    steps: np.ndarray
    x: np.ndarray
    first_change: np.ndarray
    changes: np.ndarray


def _check_obs(steps, T):
    steps = np.asarray(steps, dtype=np.int64)
    if steps.ndim != 1 or np.any(steps < 0) or np.any(steps > T):
        raise HorizonError(f"observation steps must lie in [0, {T}]")
    return steps


def _drive(n_paths, T, steps, seed, init, step, values, offset=0, chunk=_PATH_CHUNK):
    """Run a chain over all paths; ``step(state, u) -> state`` advances one lattice step.

    ``values`` maps states to increments.  ``offset`` counts lattice steps that
    are fixed before the first draw (order-2 chains fix ``y_0`` and ``y_1``).
    """
    steps = _check_obs(steps, T)
    order = np.argsort(steps, kind="stable")
    sorted_steps = steps[order]
    out = np.empty((n_paths, steps.size), dtype=values.dtype if values.dtype.kind == "f" else np.int64)
    first = np.empty(n_paths, dtype=np.int64)
    changes = np.empty(n_paths, dtype=np.int64)
    acc_dtype = out.dtype
    for paths in rng.path_chunks(n_paths, chunk):
        m = len(paths)
        cursor = rng.StreamCursor(seed, np.arange(paths.start, paths.stop, dtype=np.uint64))
        state, pre_y = init(m)
        x = np.zeros(m, dtype=acc_dtype)
        y_start = pre_y[0]
        fc = np.full(m, T + 1, dtype=np.int64)
        nch = np.zeros(m, dtype=np.int64)
        rec = np.empty((m, steps.size), dtype=acc_dtype)
        obs = 0
        t = -1
        prev = y_start
        for y_fixed in pre_y:
            t += 1
            x += y_fixed
            if t >= 1:
                fc = np.where((fc > T) & (y_fixed != y_start), t, fc)
                nch += y_fixed != prev
            prev = y_fixed
            while obs < sorted_steps.size and sorted_steps[obs] == t:
                rec[:, order[obs]] = x
                obs += 1
        remaining = T - t
        while remaining > 0:
            nb = min(_TIME_BLOCK, remaining)
            u = cursor.take(nb)
            for j in range(nb):
                state = step(state, u[:, j])
                y = values[state]
                t += 1
                x += y
                fc[(fc > T) & (y != y_start)] = t
                nch += y != prev
                prev = y
                while obs < sorted_steps.size and sorted_steps[obs] == t:
                    rec[:, order[obs]] = x
                    obs += 1
            remaining -= nb
        out[paths.start : paths.stop] = rec
        first[paths.start : paths.stop] = fc
        changes[paths.start : paths.stop] = nch
    return EnsembleResult(steps, out, first, changes)


def order1_ensemble(params: WalkParams, T: int, steps, n_paths: int, seed: int) -> EnsembleResult:
    """Stepwise two-state ensemble; row ``i`` agrees with ``simulate_order1(..., RngSpec(seed, i))``."""
    T = _check_steps(T)
    a, b = params.alpha, params.beta
    vals = np.array([-1, 1], dtype=np.int64)

    def init(m):
        s = np.full(m, 0 if params.y0 < 0 else 1, dtype=np.int8)
        return s, [vals[s]]

    def step(s, u):
        flip = u < np.where(s == 0, a, b)
        return np.where(flip, 1 - s, s).astype(np.int8)

    return _drive(n_paths, T, steps, seed, init, step, vals)


def order1_ensemble_skipahead(params: WalkParams, T: int, steps, n_paths: int, seed: int) -> EnsembleResult:
    """Skip-ahead two-state ensemble; row ``i`` agrees with ``simulate_order1_skipahead``."""
    _check_interior(params)
    T = _check_steps(T)
    steps = _check_obs(steps, T)
    p_first = params.flip_probability(params.y0)
    p_second = params.flip_probability(-params.y0)
    out = np.empty((n_paths, steps.size), dtype=np.int64)
    first = np.empty(n_paths, dtype=np.int64)
    changes = np.empty(n_paths, dtype=np.int64)
    # expected number of runs up to T, with slack
    mean_run = 0.5 * (1 / p_first + 1 / p_second)
    block = int(min(max(16, 2 * (T + 1) / mean_run + 16), 4096))
    for paths in rng.path_chunks(n_paths, 512):
        m = len(paths)
        streams = np.arange(paths.start, paths.stop, dtype=np.uint64)
        cols = []
        total = np.zeros(m, dtype=np.int64)
        pos = 0
        while np.any(total <= T):
            u = rng.uniform_block(seed, streams, pos, block)
            p = np.where((np.arange(pos, pos + block) % 2) == 0, p_first, p_second)
            a = np.minimum(geometric_runs(u, p[None, :]), T + 1).astype(np.int64)
            cols.append(a)
            total = total + a.sum(axis=1)
            pos += block
        runs = np.concatenate(cols, axis=1)
        ends = np.cumsum(runs, axis=1)
        starts = ends - runs
        sign = params.y0 * np.where(np.arange(runs.shape[1]) % 2 == 0, 1, -1)
        for col, k in enumerate(steps):
            # lattice times 0..k covered by each run
            cover = np.clip(ends, 0, k + 1) - np.clip(starts, 0, k + 1)
            out[paths.start : paths.stop, col] = cover @ sign
        first[paths.start : paths.stop] = np.minimum(runs[:, 0], T + 1)
        changes[paths.start : paths.stop] = np.count_nonzero(ends <= T, axis=1)
    return EnsembleResult(steps, out, first, changes)


def first_runs(params: WalkParams, n_paths: int, seed: int) -> np.ndarray:
    """Uncensored first sign-change times ``T_1`` of the skip-ahead paths (draw 0 of each stream)."""
    _check_interior(params)
    u = rng.uniform_block(seed, np.arange(n_paths, dtype=np.uint64), 0, 1)[:, 0]
    return geometric_runs(u, params.flip_probability(params.y0)).astype(np.int64)


def kstate_ensemble(params: KStateParams, T: int, steps, n_paths: int, seed: int, start: int = 0) -> EnsembleResult:
    T = _check_steps(T)
    if not 0 <= start < params.k:
        raise ParameterError(f"start index must be in [0, {params.k})")
    cum = _cumulative_rows(params.transition_matrix())
    vals = np.asarray(params.values, dtype=np.float64)

    def init(m):
        s = np.full(m, start, dtype=np.int8)
        return s, [vals[s]]

    return _drive(n_paths, T, steps, seed, init, lambda s, u: _next_state(cum, s, u), vals)


def order2_ensemble(params: Order2Params, T: int, steps, n_paths: int, seed: int, y0: int, y1: int) -> EnsembleResult:
    T = _check_steps(T)
    pair = order2_state_index(y0, y1)
    cum = _cumulative_rows(params.transition_matrix())
    second = np.array([s[1] for s in ORDER2_STATES], dtype=np.int64)

    def init(m):
        s = np.full(m, pair, dtype=np.int8)
        return s, [np.full(m, y0, dtype=np.int64), np.full(m, y1, dtype=np.int64)][: T + 1]

    return _drive(n_paths, T, steps, seed, init, lambda s, u: _next_state(cum, s, u), second)


def lattice_index(t: float, dt: float) -> int:
    """Lattice index of ``t`` snapped down to the grid, ``floor(t / dt)`` with a rounding guard."""
    q = t / dt
    k = math.floor(q + 1e-9)
    return int(k)
