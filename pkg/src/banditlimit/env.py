"""The limiting Gaussian bandit environment.

In batch ``b`` each arm ``k`` yields one observation
``Z[b, k] ~ N(h[k], sigma[k]**2 / (batch_scale[b] * alloc[b, k]))``, independent
across arms given the allocation; the allocation of batch ``b > 0`` is chosen by
a rule from the batches already observed.

Simulations are vectorized over replicates. Replicate ``r`` is driven entirely by
stream ``stream_ids[r]``, so any subset of replicates can be regenerated alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from . import rng
from .errors import ContractViolation, DomainError, ShapeError

ALLOC_TOL = 1e-12


@dataclass(frozen=True)
class EnvConfig:
    sigma: tuple = (0.5, 0.5)
    n_batches: int = 2
    batch_scale: Optional[tuple] = None
    first_batch_alloc: Optional[tuple] = None
    alloc_clip: float = 1e-6

    def __post_init__(self):
        sigma = tuple(float(s) for s in self.sigma)
        object.__setattr__(self, "sigma", sigma)
        k = len(sigma)
        if k < 2:
            raise DomainError("need at least two arms")
        if self.n_batches < 2:
            raise DomainError("need at least two batches")
        if not all(s > 0 for s in sigma):
            raise DomainError("every sigma must be positive")
        scale = self.batch_scale or (1.0,) * self.n_batches
        scale = tuple(float(x) for x in scale)
        if len(scale) != self.n_batches or not all(x > 0 for x in scale):
            raise DomainError("batch_scale needs one positive entry per batch")
        object.__setattr__(self, "batch_scale", scale)
        if not 0 < self.alloc_clip < 1 / k:
            raise DomainError("alloc_clip must lie in (0, 1/K)")
        first = self.first_batch_alloc or (1.0 / k,) * k
        first = tuple(float(x) for x in first)
        if len(first) != k:
            raise DomainError("first_batch_alloc needs one entry per arm")
        object.__setattr__(self, "first_batch_alloc", first)
        check_alloc(np.asarray(first), self.alloc_clip)

    @property
    def n_arms(self) -> int:
        return len(self.sigma)


@dataclass(frozen=True)
class LocalParam:
    """Arm-specific local parameters ``h``; ``tau`` is ``h[1] - h[0]``."""

    h: tuple

    def __post_init__(self):
        h = tuple(float(x) for x in self.h)
        if not all(np.isfinite(h)):
            raise DomainError("local parameters must be finite")
        object.__setattr__(self, "h", h)

    @property
    def tau(self) -> float:
        return self.h[1] - self.h[0]

    @classmethod
    def from_tau(cls, tau: float, split: float = 0.0) -> "LocalParam":
        """Two-arm parameter with ``h1 - h0 = tau``; ``split`` is the share of tau taken off arm 0."""
        return cls((-split * tau, (1.0 - split) * tau))


@dataclass(frozen=True)
class BatchDraw:
    z: np.ndarray
    alloc: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """One realized run: ``z`` and ``alloc`` have shape ``(B, K)``."""

    z: np.ndarray
    alloc: np.ndarray
    seed: rng.SeedSpec

    @property
    def batches(self) -> list:
        return [BatchDraw(self.z[b], self.alloc[b]) for b in range(self.z.shape[0])]


@dataclass(frozen=True)
class TrajectoryBatch:
    """Many runs stacked on a leading replicate axis: shapes ``(R, B, K)``."""

    z: np.ndarray
    alloc: np.ndarray
    master_seed: int
    stream_ids: np.ndarray = field(repr=False)

    def __len__(self):
        return self.z.shape[0]

    def __getitem__(self, r: int) -> Trajectory:
        return Trajectory(self.z[r], self.alloc[r], rng.SeedSpec(self.master_seed, int(self.stream_ids[r])))


class AllocationRule(Protocol):
    name: str

    def next_alloc(self, cfg: EnvConfig, z: np.ndarray, alloc: np.ndarray,
                   master_seed: int, stream_ids: np.ndarray, lane: int) -> np.ndarray:
        """Allocation for batch ``z.shape[1]`` given history arrays of shape (R, b, K)."""
        ...


def check_alloc(alloc: np.ndarray, eps: float) -> None:
    alloc = np.asarray(alloc, dtype=float)
    if np.any(alloc < eps) or np.any(alloc > 1 - eps):
        raise ContractViolation(f"allocation outside [{eps}, {1 - eps}]")
    if np.any(np.abs(alloc.sum(axis=-1) - 1.0) > ALLOC_TOL):
        raise ContractViolation("allocation fractions must sum to 1")


def noise_lane(lane: int) -> int:
    """Substream tag of the environment noise for a simulation lane."""
    return lane << 8


def base_normals(cfg: EnvConfig, master_seed: int, stream_ids, lane: int = 0) -> np.ndarray:
    """Standard normal innovations, shape (R, B, K); draw index is ``b*K + k``."""
    k, b = cfg.n_arms, cfg.n_batches
    e = rng.normals(master_seed, stream_ids, b * k, noise_lane(lane))
    return e.reshape(-1, b, k)


def batch_sd(cfg: EnvConfig, b: int, alloc: np.ndarray) -> np.ndarray:
    sigma = np.asarray(cfg.sigma)
    return sigma / np.sqrt(cfg.batch_scale[b] * alloc)


def draw_batch(cfg: EnvConfig, h: LocalParam, b: int, alloc: Sequence[float], seed: rng.SeedSpec,
               lane: int = 0) -> BatchDraw:
    alloc = np.asarray(alloc, dtype=float)
    if alloc.shape != (cfg.n_arms,) or len(h.h) != cfg.n_arms:
        raise ShapeError("allocation and local parameter need one entry per arm")
    if not 0 <= b < cfg.n_batches:
        raise ShapeError(f"batch index {b} out of range")
    check_alloc(alloc, cfg.alloc_clip)
    e = base_normals(cfg, seed.master_seed, [seed.stream_id], lane)[0, b]
    z = np.asarray(h.h) + batch_sd(cfg, b, alloc) * e
    return BatchDraw(z, alloc)


def simulate(cfg: EnvConfig, h: LocalParam, rule: AllocationRule, master_seed: int, stream_ids,
             lane: int = 0, eps: Optional[np.ndarray] = None) -> TrajectoryBatch:
    """Run the environment for every stream in ``stream_ids``.

    ``eps`` may carry precomputed :func:`base_normals` so that several local
    parameters share the same innovations (common random numbers).
    """
    stream_ids = np.atleast_1d(np.asarray(stream_ids, dtype=np.uint64))
    if len(h.h) != cfg.n_arms:
        raise ShapeError("local parameter needs one entry per arm")
    if eps is None:
        eps = base_normals(cfg, master_seed, stream_ids, lane)
    n_rep, n_b, n_k = eps.shape
    if (n_b, n_k) != (cfg.n_batches, cfg.n_arms) or n_rep != stream_ids.size:
        raise ShapeError("innovations do not match the environment")
    hv = np.asarray(h.h)
    z = np.empty_like(eps)
    alloc = np.empty_like(eps)
    alloc[:, 0] = cfg.first_batch_alloc
    for b in range(n_b):
        if b > 0:
            a = rule.next_alloc(cfg, z[:, :b], alloc[:, :b], master_seed, stream_ids, lane)
            check_alloc(a, cfg.alloc_clip)
            alloc[:, b] = a
        z[:, b] = hv + batch_sd(cfg, b, alloc[:, b]) * eps[:, b]
    return TrajectoryBatch(z, alloc, int(master_seed), stream_ids)


def run_trajectory(cfg: EnvConfig, h: LocalParam, rule: AllocationRule, seed: rng.SeedSpec,
                   lane: int = 0) -> Trajectory:
    return simulate(cfg, h, rule, seed.master_seed, [seed.stream_id], lane)[0]
