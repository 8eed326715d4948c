"""Finite-sample two-batch, two-arm adaptive experiments under local alternatives.

Arm ``k`` has parameter ``theta0[k] + h[k] / sqrt(n)``. Batch 1 puts ``n/2``
units on each arm, batch 2 splits ``n`` units according to the rule. Arm
outcomes are simulated through their sufficient statistics (sample mean of
Gaussians, success count of Bernoullis), which have exactly the law of the
statistics computed from individual draws.

Statistics are formed from ``Z[b, k] = sqrt(n) * (mean[b, k] - theta0[k])`` so
that they are directly comparable with the limit bandit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special, stats as sps

from . import parallel, rng
from .allocation import Posterior, Thompson, WeightedThompson, thompson_alloc_2arm, update_posterior, weighted_alloc
from .env import EnvConfig, LocalParam, simulate
from .errors import DomainError
from .stats import compute_w, pooled_dim, zjm_statistic

FAMILIES = ("gaussian", "bernoulli")
STATISTICS = ("lambda2", "w1", "w2", "zjm", "pooled_dim")
DEFAULT_N_LIST = (64, 256, 1024, 4096)

LIMIT_LANE = 2
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(128)
_TAIL = 1e-15


@dataclass(frozen=True)
class FiniteSampleConfig:
    family: str = "gaussian"
    theta0: tuple = (0.0, 0.0)
    sd: tuple = (0.5, 0.5)
    h: tuple = (0.0, 1.0)
    n: int = 1024
    rule: str = "thompson"
    c: float = 0.0
    reps: int = 100_000
    seed: int = 20210917
    thompson_draws: int = 10_000
    bernoulli_posterior: str = "mc"
    alloc_clip: float = 1e-6
    threads: int = 1

    def __post_init__(self):
        for name in ("theta0", "sd", "h"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if self.family not in FAMILIES:
            raise DomainError(f"family must be one of {FAMILIES}")
        if len(self.theta0) != 2 or len(self.h) != 2:
            raise DomainError("theta0 and h need one entry per arm (two arms)")
        if self.theta0[0] != self.theta0[1]:
            raise DomainError("the baseline must have zero treatment effect: theta0 equal across arms")
        if self.n < 2 or self.n % 2:
            raise DomainError("n must be even and at least 2")
        if self.rule not in ("thompson", "weighted"):
            raise DomainError("rule must be 'thompson' or 'weighted'")
        if not 0 <= self.c <= 1:
            raise DomainError("shrinkage c must lie in [0, 1]")
        if self.bernoulli_posterior not in ("mc", "quad"):
            raise DomainError("bernoulli_posterior must be 'mc' or 'quad'")
        if self.family == "gaussian" and (len(self.sd) != 2 or min(self.sd) <= 0):
            raise DomainError("Gaussian arms need two positive standard deviations")
        if self.family == "bernoulli":
            p = self.arm_params
            if not all(0 < x < 1 for x in p) or not 0 < self.theta0[0] < 1:
                raise DomainError(
                    f"Bernoulli success probabilities theta0 + h/sqrt(n) = {p} must lie in (0, 1)")

    @property
    def arm_params(self) -> tuple:
        r = np.sqrt(self.n)
        return tuple(t + hk / r for t, hk in zip(self.theta0, self.h))

    @property
    def sigma(self) -> tuple:
        """Per-arm noise scale of the matching limit experiment."""
        if self.family == "gaussian":
            return self.sd
        return tuple(float(np.sqrt(t * (1 - t))) for t in self.theta0)

    def limit_rule(self):
        return Thompson() if self.rule == "thompson" else WeightedThompson(self.c)


@dataclass
class FiniteRunResult:
    lambda2_target: np.ndarray
    lambda2: np.ndarray
    z: np.ndarray = field(repr=False)
    alloc: np.ndarray = field(repr=False)
    sigma: tuple = (0.5, 0.5)

    def statistic(self, name: str) -> np.ndarray:
        d = compute_w(self)
        if name == "lambda2":
            return self.lambda2
        if name == "w1":
            return d.w1
        if name == "w2":
            return d.w2
        if name == "zjm":
            return zjm_statistic(d, self.sigma)
        if name == "pooled_dim":
            return pooled_dim(self)
        raise KeyError(name)


def _substream(n: int, part: int) -> int:
    return (n << 4) | part


def prob_beta_greater(a0, b0, a1, b1) -> np.ndarray:
    """P(X > Y) for independent X ~ Beta(a0, b0), Y ~ Beta(a1, b1) by Gauss-Legendre quadrature.

    Integrates ``f_X(x) * F_Y(x)`` between the 1e-15 and 1 - 1e-15 quantiles of X.
    """
    a0, b0, a1, b1 = (np.asarray(x, dtype=float)[..., None] for x in (a0, b0, a1, b1))
    lo = special.betaincinv(a0, b0, _TAIL)
    hi = special.betaincinv(a0, b0, 1 - _TAIL)
    half = 0.5 * (hi - lo)
    x = lo + half * (_GL_NODES + 1)
    logpdf = (a0 - 1) * np.log(x) + (b0 - 1) * np.log1p(-x) - special.betaln(a0, b0)
    val = np.exp(logpdf) * special.betainc(a1, b1, x)
    return (half[..., 0]) * np.sum(_GL_WEIGHTS * val, axis=-1)


def prob_beta_greater_mc(a0, b0, a1, b1, draws: int, master_seed: int, stream_ids, tag: int) -> np.ndarray:
    """Monte Carlo version of :func:`prob_beta_greater`, one keyed generator per replicate."""
    out = np.empty(len(stream_ids))
    for i, s in enumerate(stream_ids):
        g = np.random.Generator(np.random.Philox(key=(int(s) << 64) | int(master_seed), counter=[tag, 0, 0, 0]))
        x = g.beta(a0[i], b0[i], draws)
        y = g.beta(a1[i], b1[i], draws)
        out[i] = np.mean(x > y)
    return out


def _arm_totals(cfg: FiniteSampleConfig, u: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Per-arm sums of ``counts`` outcomes from uniforms ``u``; both shaped (R, 2).

    Gaussian sums are returned as means times counts, Bernoulli sums are success counts.
    """
    theta = np.asarray(cfg.arm_params)
    if cfg.family == "gaussian":
        return counts * (theta + np.asarray(cfg.sd) * special.ndtri(u) / np.sqrt(counts))
    return sps.binom.ppf(u, counts, theta)


def _simulate_chunk(cfg: FiniteSampleConfig, ids: np.ndarray) -> FiniteRunResult:
    n, eps = cfg.n, cfg.alloc_clip
    root = np.sqrt(n)
    base = np.asarray(cfg.theta0)
    u = rng.uniforms(cfg.seed, ids, 4, _substream(n, 1))
    m = np.full((ids.size, 2), n // 2)
    tot1 = _arm_totals(cfg, u[:, :2], m)
    z1 = root * (tot1 / m - base)

    if cfg.family == "gaussian":
        env = EnvConfig(sigma=cfg.sd, alloc_clip=eps)
        post = update_posterior(Posterior.flat(2, ids.size), z1, np.full((ids.size, 2), 0.5), env, 0)
        lam = np.atleast_1d(thompson_alloc_2arm(post, eps))
    else:
        a0, b0 = 1 + tot1[:, 0], 1 + m[:, 0] - tot1[:, 0]
        a1, b1 = 1 + tot1[:, 1], 1 + m[:, 1] - tot1[:, 1]
        if cfg.bernoulli_posterior == "quad":
            lam = prob_beta_greater(a0, b0, a1, b1)
        else:
            lam = prob_beta_greater_mc(a0, b0, a1, b1, cfg.thompson_draws, cfg.seed, ids, _substream(n, 2))
        lam = np.clip(lam, eps, 1 - eps)
    if cfg.rule == "weighted":
        lam = np.atleast_1d(weighted_alloc(lam, cfg.c, eps))

    n0 = np.clip(np.floor(n * lam + 0.5), 1, n - 1)
    counts2 = np.stack([n0, n - n0], axis=1)
    z2 = root * (_arm_totals(cfg, u[:, 2:], counts2) / counts2 - base)
    realized = n0 / n
    alloc = np.empty((ids.size, 2, 2))
    alloc[:, 0] = 0.5
    alloc[:, 1, 0] = realized
    alloc[:, 1, 1] = 1 - realized
    return FiniteRunResult(lam, realized, np.stack([z1, z2], axis=1), alloc, cfg.sigma)


def run_finite(cfg: FiniteSampleConfig, seed: rng.SeedSpec | None = None) -> FiniteRunResult:
    """Simulate ``cfg.reps`` experiments; replicate ``r`` uses stream ``seed.stream_id + r``."""
    if seed is not None:
        cfg = replace(cfg, seed=seed.master_seed)
    start = 0 if seed is None else seed.stream_id

    def work(lo, hi):
        return _simulate_chunk(cfg, np.arange(start + lo, start + hi, dtype=np.uint64))

    parts = parallel.map_chunks(work, cfg.reps, cfg.threads)
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
    return FiniteRunResult(cat("lambda2_target"), cat("lambda2"), cat("z"), cat("alloc"), cfg.sigma)


def limit_sample(cfg: FiniteSampleConfig, reps: int | None = None):
    """Matching limit-bandit trajectories (independent lane) for the same h, sigma and rule."""
    reps = cfg.reps if reps is None else reps
    env = EnvConfig(sigma=cfg.sigma, alloc_clip=cfg.alloc_clip)
    h = LocalParam(cfg.h)
    rule = cfg.limit_rule()

    def work(lo, hi):
        return simulate(env, h, rule, cfg.seed, np.arange(lo, hi, dtype=np.uint64), LIMIT_LANE)

    parts = parallel.map_chunks(work, reps, cfg.threads)
    z = np.concatenate([p.z for p in parts])
    alloc = np.concatenate([p.alloc for p in parts])
    return FiniteRunResult(alloc[:, 1, 0], alloc[:, 1, 0], z, alloc, cfg.sigma)


def ks_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(sps.ks_2samp(a, b).statistic)


def convergence_study(cfg: FiniteSampleConfig, n_list=DEFAULT_N_LIST, reps: int | None = None,
                      statistics=STATISTICS) -> list:
    """KS distance between finite-sample and limit draws of each statistic, per n."""
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must be strictly increasing with at least two entries")
    reps = cfg.reps if reps is None else reps
    # validate every n before spending time on simulation
    cfgs = [replace(cfg, n=n, reps=reps) for n in n_list]
    limit = limit_sample(cfgs[-1], reps)
    rows = []
    for c in cfgs:
        fin = run_finite(c)
        for s in statistics:
            rows.append({"family": c.family, "n": c.n, "statistic": s,
                         "ks": ks_distance(fin.statistic(s), limit.statistic(s)),
                         "reps": reps, "seed": c.seed})
    return rows
