"""Limit experiments for decisions with fixed information sets.

Two decision nodes whose data sets overlap decompose into three disjoint blocks
(node 1 only, node 2 only, shared); each block contributes an independent
Gaussian observation of ``h`` with precision proportional to its mass. For
nested sets ``[0, t_d]`` the same experiment is a Brownian motion with drift
observed at the grid times.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import rng
from .errors import DomainError, OmittedBlockError, ShapeError

BLOCKS = ("1", "2", "12")


@dataclass(frozen=True)
class InfoPartition:
    lambda1: float
    lambda2: float
    lambda12: float
    J0: float = 1.0

    def __post_init__(self):
        lams = (self.lambda1, self.lambda2, self.lambda12)
        if min(lams) < 0 or sum(lams) > 1 + 1e-12:
            raise DomainError("block masses must be nonnegative and sum to at most one")
        if self.J0 <= 0:
            raise DomainError("J0 must be positive")

    def mass(self, block: str) -> float:
        return {"1": self.lambda1, "2": self.lambda2, "12": self.lambda12}[block]


@dataclass(frozen=True)
class LimitDraw:
    """Draws of ``(Z1, Z2, Z12)``; a block with zero mass is absent."""

    blocks: dict

    def __getitem__(self, block):
        if block not in self.blocks:
            raise OmittedBlockError(f"block {block} has zero mass and is omitted")
        return self.blocks[block]

    @property
    def z1(self):
        return self["1"]

    @property
    def z2(self):
        return self["2"]

    @property
    def z12(self):
        return self["12"]


def draw_limit_experiment(p: InfoPartition, h: float, seed: rng.SeedSpec, n: Optional[int] = None,
                          blocks: tuple = None) -> LimitDraw:
    """Independent ``N(h, 1/(lambda * J0))`` per block.

    With ``n`` given, replicate ``i`` uses stream ``seed.stream_id + i`` and each
    block is an array of length ``n``; otherwise floats from ``seed`` itself.
    """
    present = tuple(b for b in BLOCKS if p.mass(b) > 0)
    if blocks is None:
        blocks = present
    for b in blocks:
        if b not in BLOCKS:
            raise KeyError(f"unknown block {b!r}")
        if p.mass(b) == 0:
            raise OmittedBlockError(f"block {b} has zero mass and is omitted")
    m = 1 if n is None else n
    ids = np.arange(seed.stream_id, seed.stream_id + m, dtype=np.uint64)
    e = rng.normals(seed.master_seed, ids, len(BLOCKS))
    out = {}
    for j, b in enumerate(BLOCKS):
        if b in blocks:
            z = h + e[:, j] / np.sqrt(p.mass(b) * p.J0)
            out[b] = float(z[0]) if n is None else z
    return LimitDraw(out)


@dataclass(frozen=True)
class TimeGrid:
    times: tuple
    J0: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        object.__setattr__(self, "times", t)
        if not t or t[0] <= 0 or t[-1] > 1 or any(b <= a for a, b in zip(t, t[1:])):
            raise DomainError("grid times must be strictly increasing in (0, 1]")
        if self.J0 <= 0:
            raise DomainError("J0 must be positive")

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times)


@dataclass(frozen=True)
class BrownianPath:
    """Paths on the grid; arrays have shape (n_paths, D)."""

    grid: TimeGrid
    B: np.ndarray
    W: np.ndarray
    V: np.ndarray


def sample_brownian(grid: TimeGrid, seed: rng.SeedSpec, n_paths: int = 1) -> BrownianPath:
    """Brownian motion from independent increments; path ``i`` uses stream ``seed.stream_id + i``.

    ``W = t*h + B/sqrt(J0)`` and ``V = B - (t/t_D) * B(t_D)``, the bridge pinned at the last grid time.
    """
    t = grid.t
    ids = np.arange(seed.stream_id, seed.stream_id + n_paths, dtype=np.uint64)
    e = rng.normals(seed.master_seed, ids, t.size)
    dt = np.diff(t, prepend=0.0)
    B = np.cumsum(e * np.sqrt(dt), axis=1)
    W = t * grid.h + B / np.sqrt(grid.J0)
    V = B - (t / t[-1]) * B[:, -1:]
    V[:, -1] = 0.0
    return BrownianPath(grid, B, W, V)


def reconstruct_w(grid: TimeGrid, w_td, v, c: int):
    """Recover ``W(t_c)`` from ``W(t_d)`` and bridge values ``V(t_0..t_d)`` (0-based, ``d = len(v) - 1``).

    ``W(t_c) = (t_c/t_d) * (W(t_d) - s*V(t_d)) + s*V(t_c)`` with ``s = J0**-0.5``;
    the bridge is built from the unscaled motion, hence the factor.
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[-1] - 1
    if not 0 <= c < d or d >= len(grid.times):
        raise ShapeError(f"need 0 <= c < d < D, got c={c}, d={d}, D={len(grid.times)}")
    s = 1.0 / np.sqrt(grid.J0)
    tc, td = grid.times[c], grid.times[d]
    out = (tc / td) * (np.asarray(w_td) - s * v[..., d]) + s * v[..., c]
    return float(out) if np.ndim(out) == 0 else out


def reconstruction_error(path: BrownianPath) -> float:
    """Largest |reconstructed - sampled W| over all paths and index pairs ``c < d``."""
    D = len(path.grid.times)
    worst = 0.0
    for d in range(1, D):
        for c in range(d):
            r = reconstruct_w(path.grid, path.W[:, d], path.V[:, : d + 1], c)
            worst = max(worst, float(np.max(np.abs(r - path.W[:, c]))))
    return worst


COST_PRESETS: dict = {
    "zero": lambda x: np.zeros_like(x),
    "absolute": lambda x: np.abs(x),
    "quadratic": lambda x: np.square(x),
}


def split_sample_estimator(z1, z2, z12, u):
    """Each node estimates with its own block only."""
    return z1, z2


def compound_risk(estimator_pair: Callable, p: InfoPartition, h: float, cost: Callable, reps: int,
                  seed: rng.SeedSpec, return_se: bool = False):
    """Monte Carlo risk under ``(s1 - h)**2 + (s2 - h)**2 + cost(|s1 - s2|)``.

    ``estimator_pair(z1, z2, z12, u)`` gets arrays (``None`` for absent blocks)
    plus an independent uniform ``u`` per replicate.
    """
    ids = np.arange(seed.stream_id, seed.stream_id + reps, dtype=np.uint64)
    e = rng.normals(seed.master_seed, ids, len(BLOCKS))
    z = {}
    for j, b in enumerate(BLOCKS):
        z[b] = h + e[:, j] / np.sqrt(p.mass(b) * p.J0) if p.mass(b) > 0 else None
    u = rng.uniforms(seed.master_seed, ids, 1, substream=1)[:, 0]
    s1, s2 = estimator_pair(z["1"], z["2"], z["12"], u)
    s1 = np.broadcast_to(np.asarray(s1, dtype=float), (reps,))
    s2 = np.broadcast_to(np.asarray(s2, dtype=float), (reps,))
    loss = (s1 - h) ** 2 + (s2 - h) ** 2 + cost(np.abs(s1 - s2))
    risk = float(loss.mean())
    if return_se:
        return risk, float(loss.std(ddof=1) / np.sqrt(reps))
    return risk
