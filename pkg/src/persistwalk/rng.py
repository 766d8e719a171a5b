"""Counter-based random streams.

Every draw is a pure function of ``(seed, stream, index)``: the 64-bit seed is
the Philox4x32-10 key, the counter holds the 64-bit stream id in its upper
half and ``index // 2`` in its lower half. Each counter block yields two
53-bit doubles. Any draw can be addressed directly, so streams are trivially
jumpable and ensembles give identical results for every chunking or ordering
of paths.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_U64 = (1 << 64) - 1

# keeps the working set of the round function in cache
_BLOCK = 16384


@dataclass(frozen=True)
class RngSpec:
    """One reproducible stream: ``seed`` selects the key, ``stream`` the counter space."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")


def philox4x32(c0, c1, c2, c3, key: int):
    """Philox4x32-10 bijection on uint64 arrays holding 32-bit words."""
    k0 = key & 0xFFFFFFFF
    k1 = (key >> 32) & 0xFFFFFFFF
    for _ in range(10):
        p0 = c0 * _M0
        p1 = c2 * _M1
        n0 = p1 >> _S32
        n0 ^= c1
        n0 ^= np.uint64(k0)
        n2 = p0 >> _S32
        n2 ^= c3
        n2 ^= np.uint64(k1)
        p1 &= _MASK32
        p0 &= _MASK32
        c0, c1, c2, c3 = n0, p1, n2, p0
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    # 53 bits, centred in their cell: strictly inside (0, 1)
    k = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (k.astype(np.float64) + 0.5) * 2.0**-53


def _uniform_flat(seed: int, streams: np.ndarray, index: np.ndarray) -> np.ndarray:
    out = np.empty(index.shape[0], dtype=np.float64)
    for lo in range(0, index.shape[0], _BLOCK):
        sl = slice(lo, lo + _BLOCK)
        idx = index[sl]
        blk = idx >> np.uint64(1)
        st = streams[sl]
        w = philox4x32(blk & _MASK32, blk >> _S32, st & _MASK32, st >> _S32, seed)
        odd = (idx & np.uint64(1)).astype(bool)
        hi = np.where(odd, w[2], w[0])
        lo_w = np.where(odd, w[3], w[1])
        out[sl] = _to_unit(hi, lo_w)
    return out


def uniform(spec: RngSpec, n: int, start: int = 0) -> np.ndarray:
    """Draws ``start .. start+n-1`` of one stream, each in the open interval (0, 1)."""
    idx = np.arange(start, start + n, dtype=np.uint64)
    st = np.full(n, spec.stream, dtype=np.uint64)
    return _uniform_flat(int(spec.seed), st, idx)


def uniform_block(seed: int, streams, start: int, n: int) -> np.ndarray:
    """Matrix of shape ``(len(streams), n)``; row ``i`` is draws ``start..start+n-1`` of ``streams[i]``."""
    streams = np.asarray(streams, dtype=np.uint64)
    m = streams.shape[0]
    idx = np.tile(np.arange(start, start + n, dtype=np.uint64), m)
    st = np.repeat(streams, n)
    return _uniform_flat(int(seed), st, idx).reshape(m, n)


def derive_seed(seed: int, role: str) -> int:
    """Independent key for a named role (oracle ensembles, jitter, restarts, ...)."""
    ss = np.random.SeedSequence([int(seed) & _U64, zlib.crc32(role.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class StreamCursor:
    """Sequential reader over a fixed set of streams.

    Each call to :meth:`take` returns the next ``n`` draws of every stream, so a
    path's draws depend only on its own stream, never on which other paths
    share the cursor.
    """

    def __init__(self, seed: int, streams):
        self.seed = int(seed)
        self.streams = np.asarray(streams, dtype=np.uint64)
        self.position = 0

    def take(self, n: int) -> np.ndarray:
        out = uniform_block(self.seed, self.streams, self.position, n)
        self.position += n
        return out


def path_chunks(n_paths: int, chunk: int):
    """Contiguous ``range`` objects covering path indices ``0..n_paths-1``."""
    for lo in range(0, n_paths, chunk):
        yield range(lo, min(lo + chunk, n_paths))
