"""Allocation rules for the limit bandit.

Posteriors are flat-prior Gaussian posteriors over the local parameters, held as
arrays so a rule can be applied to many replicates at once. Scalars work too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .env import EnvConfig
from .errors import DomainError, RuleUndefinedError, ShapeError

RULE_KINDS = ("fixed", "thompson", "weighted_thompson", "thompson_mc")


@dataclass(frozen=True)
class Posterior:
    """Per-arm posterior means and precisions; precision 0 means no data (mean is nan)."""

    mean: np.ndarray
    precision: np.ndarray

    @classmethod
    def flat(cls, n_arms: int, n_rep: int | None = None) -> "Posterior":
        shape = (n_arms,) if n_rep is None else (n_rep, n_arms)
        return cls(np.full(shape, np.nan), np.zeros(shape))


def update_posterior(prior: Posterior, z, alloc, cfg: EnvConfig, b: int) -> Posterior:
    """Normal-normal update with one batch; ``z``/``alloc`` are (..., K)."""
    z = np.asarray(z, dtype=float)
    alloc = np.asarray(alloc, dtype=float)
    prec_b = cfg.batch_scale[b] * alloc / np.square(cfg.sigma)
    p = prior.precision + prec_b
    m = np.where(prior.precision > 0,
                 (prior.precision * np.nan_to_num(prior.mean) + prec_b * z) / p,
                 z)
    return Posterior(m, p)


def posterior_from_history(cfg: EnvConfig, z: np.ndarray, alloc: np.ndarray) -> Posterior:
    """Posterior after the batches in ``z`` of shape (R, b, K)."""
    post = Posterior.flat(cfg.n_arms, z.shape[0])
    for b in range(z.shape[1]):
        post = update_posterior(post, z[:, b], alloc[:, b], cfg, b)
    return post


def thompson_alloc_2arm(post: Posterior, eps: float = 1e-6):
    """Posterior probability that arm 0 has the larger mean, clipped to [eps, 1 - eps]."""
    m = np.asarray(post.mean, dtype=float)
    p = np.asarray(post.precision, dtype=float)
    if m.shape[-1] != 2:
        raise ShapeError("thompson_alloc_2arm needs exactly two arms")
    if np.any(p <= 0):
        raise RuleUndefinedError("Thompson allocation needs positive precision on both arms")
    scale = np.sqrt(1.0 / p[..., 0] + 1.0 / p[..., 1])
    lam = np.clip(rng.std_normal_cdf((m[..., 0] - m[..., 1]) / scale), eps, 1 - eps)
    return float(lam) if np.ndim(lam) == 0 else lam


def weighted_alloc(base, c: float, eps: float = 1e-6):
    """Shrink a two-arm allocation toward 50-50: ``(1 - c) * base + c / 2``."""
    if not 0 <= c <= 1:
        raise DomainError("shrinkage c must lie in [0, 1]")
    out = np.clip((1 - c) * np.asarray(base, dtype=float) + c / 2, eps, 1 - eps)
    return float(out) if out.ndim == 0 else out


def thompson_alloc_mc(post: Posterior, draws: int, master_seed: int, stream_ids, substream: int = 0,
                      eps: float = 1e-6, chunk: int = 256) -> np.ndarray:
    """Monte Carlo probability that each arm is best, for any number of arms.

    Ties go to the lowest arm index. Fractions are mixed with the uniform
    allocation, ``eps + (1 - K*eps) * freq``, which keeps every entry in
    ``[eps, 1 - (K-1)*eps]`` while summing to one.
    """
    m = np.atleast_2d(np.asarray(post.mean, dtype=float))
    p = np.atleast_2d(np.asarray(post.precision, dtype=float))
    if draws < 1000:
        raise DomainError("thompson_mc needs at least 1000 posterior draws")
    if np.any(p <= 0):
        raise RuleUndefinedError("Thompson allocation needs positive precision on every arm")
    stream_ids = np.atleast_1d(np.asarray(stream_ids, dtype=np.uint64))
    n_rep, k = m.shape
    if stream_ids.size != n_rep:
        raise ShapeError("one stream per posterior row is required")
    freq = np.empty((n_rep, k))
    sd = 1.0 / np.sqrt(p)
    for lo in range(0, n_rep, chunk):
        hi = min(lo + chunk, n_rep)
        e = rng.normals(master_seed, stream_ids[lo:hi], draws * k, substream).reshape(hi - lo, draws, k)
        theta = m[lo:hi, None, :] + sd[lo:hi, None, :] * e
        best = np.argmax(theta, axis=-1)
        freq[lo:hi] = np.stack([(best == j).mean(axis=1) for j in range(k)], axis=1)
    return eps + (1 - k * eps) * freq


def _two_arm(lam0: np.ndarray) -> np.ndarray:
    return np.stack([lam0, 1.0 - lam0], axis=-1)


@dataclass(frozen=True)
class Fixed:
    weights: tuple = (0.5, 0.5)
    name: str = "fixed"
    w1_measurable: bool = True

    def next_alloc(self, cfg, z, alloc, master_seed, stream_ids, lane):
        if len(self.weights) != cfg.n_arms:
            raise RuleUndefinedError("fixed weights need one entry per arm")
        return np.broadcast_to(np.asarray(self.weights, dtype=float), (z.shape[0], cfg.n_arms)).copy()


@dataclass(frozen=True)
class Thompson:
    name: str = "thompson"
    w1_measurable: bool = True

    def next_alloc(self, cfg, z, alloc, master_seed, stream_ids, lane):
        if cfg.n_arms != 2:
            raise RuleUndefinedError("closed-form Thompson is two-arm only; use thompson_mc")
        post = posterior_from_history(cfg, z, alloc)
        return _two_arm(np.atleast_1d(thompson_alloc_2arm(post, cfg.alloc_clip)))


@dataclass(frozen=True)
class WeightedThompson:
    c: float = 0.1
    name: str = "weighted_thompson"
    w1_measurable: bool = True

    def __post_init__(self):
        if not 0 <= self.c <= 1:
            raise DomainError("shrinkage c must lie in [0, 1]")

    def next_alloc(self, cfg, z, alloc, master_seed, stream_ids, lane):
        if cfg.n_arms != 2:
            raise RuleUndefinedError("weighted Thompson is two-arm only")
        post = posterior_from_history(cfg, z, alloc)
        base = np.atleast_1d(thompson_alloc_2arm(post, cfg.alloc_clip))
        return _two_arm(np.atleast_1d(weighted_alloc(base, self.c, cfg.alloc_clip)))


@dataclass(frozen=True)
class ThompsonMC:
    draws: int = 10_000
    name: str = "thompson_mc"
    w1_measurable: bool = False

    def __post_init__(self):
        if self.draws < 1000:
            raise DomainError("thompson_mc needs at least 1000 posterior draws")

    def next_alloc(self, cfg, z, alloc, master_seed, stream_ids, lane):
        post = posterior_from_history(cfg, z, alloc)
        substream = (lane << 8) | z.shape[1]
        return thompson_alloc_mc(post, self.draws, master_seed, stream_ids, substream, cfg.alloc_clip)


def make_rule(kind: str, c: float = 0.1, weights=None, draws: int = 10_000):
    if kind == "fixed":
        return Fixed(tuple(weights) if weights is not None else (0.5, 0.5))
    if kind == "thompson":
        return Thompson()
    if kind == "weighted_thompson":
        return WeightedThompson(c)
    if kind == "thompson_mc":
        return ThompsonMC(draws)
    raise DomainError(f"unknown rule {kind!r}; expected one of {', '.join(RULE_KINDS)}")


def rule_c(rule) -> float:
    """Shrinkage parameter for reporting; zero for rules without one."""
    return float(getattr(rule, "c", 0.0))
