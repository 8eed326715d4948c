"""Counter-based random streams and scalar Gaussian special functions.

Every variate in the package is a pure function of
``(master_seed, stream_id, substream, draw_index)``. The underlying bijection is
Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3"),
evaluated with numpy so that a whole block of streams is produced in one shot.
Because nothing is stateful, chunking or threading a simulation can never change
its output.

Counter layout per Philox block: ``(block, substream, stream_lo, stream_hi)``;
key: ``(seed_lo, seed_hi)``. One block gives two 53-bit uniforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10

U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class SeedSpec:
    """Address of one random stream: a master seed plus a per-replicate stream id."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= U64_MAX:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def with_stream(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)


def philox4x32(c0, c1, c2, c3, k0: int, k1: int):
    """Philox4x32-10 on broadcastable uint32 counter words (held as uint64).

    Returns the four output words as uint64 arrays with values < 2**32.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3))
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0 = int(k0) & 0xFFFFFFFF
    k1 = int(k1) & 0xFFFFFFFF
    for r in range(_ROUNDS):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
        if r < _ROUNDS - 1:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _as_streams(stream_ids) -> np.ndarray:
    s = np.atleast_1d(np.asarray(stream_ids))
    if s.ndim != 1:
        raise DomainError("stream_ids must be one-dimensional")
    if s.size and (s.dtype.kind not in "ui" or (s.dtype.kind == "i" and s.min() < 0)):
        raise DomainError("stream_ids must be nonnegative integers")
    return s.astype(np.uint64)


def uniforms(master_seed: int, stream_ids, n_draws: int, substream: int = 0) -> np.ndarray:
    """Uniforms on the open interval (0, 1), shape ``(len(stream_ids), n_draws)``.

    Draw ``j`` of stream ``s`` depends only on ``(master_seed, s, substream, j)``.
    """
    if not 0 <= substream < 2**32:
        raise DomainError("substream must fit in 32 bits")
    streams = _as_streams(stream_ids)
    n_blocks = (n_draws + 1) // 2
    blocks = np.arange(n_blocks, dtype=np.uint64)[None, :]
    lo = (streams & _MASK32)[:, None]
    hi = (streams >> _SHIFT32)[:, None]
    seed = int(master_seed)
    x0, x1, x2, x3 = philox4x32(blocks, np.uint64(substream), lo, hi, seed & 0xFFFFFFFF, seed >> 32)
    # two 64-bit words per block, top 53 bits each
    a = ((x0 << _SHIFT32) | x1) >> np.uint64(11)
    b = ((x2 << _SHIFT32) | x3) >> np.uint64(11)
    words = np.empty((streams.size, 2 * n_blocks), dtype=np.uint64)
    words[:, 0::2] = a
    words[:, 1::2] = b
    words = words[:, :n_draws]
    return (words.astype(np.float64) + 0.5) * 2.0**-53


def normals(master_seed: int, stream_ids, n_draws: int, substream: int = 0) -> np.ndarray:
    """Standard normals by inversion of :func:`uniforms`; same addressing."""
    return special.ndtri(uniforms(master_seed, stream_ids, n_draws, substream))


def draw_normal(seed: SeedSpec, mean: float, sd: float, index: int = 0, substream: int = 0) -> float:
    if sd < 0:
        raise DomainError(f"sd must be nonnegative, got {sd}")
    if sd == 0:
        return float(mean)
    z = normals(seed.master_seed, [seed.stream_id], index + 1, substream)[0, index]
    return float(mean + sd * z)


def std_normal_cdf(x):
    """Standard normal CDF (Cephes ``ndtr``; absolute error well below 1e-15)."""
    x = np.asarray(x, dtype=float)
    out = special.ndtr(x)
    return float(out) if out.ndim == 0 else out


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on (0, 1).

    Cephes ``ndtri`` followed by one Newton step against ``ndtr``.
    """
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise DomainError("std_normal_quantile requires 0 < p < 1")
    x = special.ndtri(p)
    dens = np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)
    step = (special.ndtr(x) - p) / dens
    # the correction only helps where the density is not vanishingly small
    x = np.where(dens > 1e-300, x - step, x)
    return float(x) if x.ndim == 0 else x
