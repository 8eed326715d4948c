"""Monte Carlo size correction and power curves in the limit bandit.

Null critical values come from ``null_reps`` trajectories on the calibration
lane; power is estimated on a separate evaluation lane, so the size check at
``tau = 0`` is out of sample. Replicate ``r`` uses stream ``r`` at every grid
point (common random numbers).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import parallel
from .allocation import Thompson, rule_c
from .env import EnvConfig, LocalParam, base_normals, simulate
from .errors import DomainError
from .stats import TEST_NAMES, statistic

EVAL_LANE = 0
NULL_LANE = 1

ALT_SPLITS = {"zero_control": 0.0, "symmetric": 0.5}

FULL_NULLS = ("invariant", "point")

DEFAULT_TAU_GRID = tuple(0.25 * i for i in range(17))


@dataclass(frozen=True)
class PowerStudyConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    rule: object = field(default_factory=Thompson)
    tests: tuple = TEST_NAMES
    alpha: float = 0.05
    tau_grid: tuple = DEFAULT_TAU_GRID
    null_reps: int = 1_000_000
    power_reps: int = 100_000
    alt_split: str = "zero_control"
    full_null: str = "invariant"
    seed: int = 20210917
    threads: int = 1

    def __post_init__(self):
        tau = tuple(float(t) for t in self.tau_grid)
        object.__setattr__(self, "tau_grid", tau)
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if any(t < 0 for t in tau) or list(tau) != sorted(tau):
            raise DomainError("tau_grid must be sorted and nonnegative")
        if min(self.null_reps, self.power_reps) < 10_000:
            raise DomainError("null_reps and power_reps must be at least 10000")
        if self.alt_split not in ALT_SPLITS:
            raise DomainError(f"alt_split must be one of {sorted(ALT_SPLITS)}")
        if self.full_null not in FULL_NULLS:
            raise DomainError(f"full_null must be one of {FULL_NULLS}")
        for t in self.tests:
            if t not in TEST_NAMES:
                raise DomainError(f"unknown test {t!r}")
        if self.env.n_arms != 2 or self.env.n_batches != 2:
            raise DomainError("power studies use the two-arm, two-batch environment")
        if self.env.batch_scale != (1.0, 1.0) or self.env.first_batch_alloc != (0.5, 0.5):
            raise DomainError("power studies use equal batches and a 50-50 first batch")

    def local_param(self, tau: float) -> LocalParam:
        return LocalParam.from_tau(tau, ALT_SPLITS[self.alt_split])


@dataclass
class PowerCurve:
    tau: np.ndarray
    power: dict
    se: dict
    crit: dict
    config: PowerStudyConfig

    def rows(self):
        cfg = self.config
        for test in self.power:
            for i, t in enumerate(self.tau):
                yield {
                    "test": test, "tau": float(t), "power": float(self.power[test][i]),
                    "se": float(self.se[test][i]), "crit": float(self.crit[test]),
                    "alpha": cfg.alpha, "rule": cfg.rule.name, "c": rule_c(cfg.rule),
                    "sigma0": cfg.env.sigma[0], "sigma1": cfg.env.sigma[1], "seed": cfg.seed,
                }


def binomial_se(p, n: int):
    """Binomial standard error, floored at 1/n so it stays positive at p in {0, 1}."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(np.maximum(p * (1 - p), 1.0 / n) / n)


def upper_quantile(x: np.ndarray, alpha: float) -> float:
    """Empirical (1 - alpha) quantile (inverse ECDF); rejecting ``x > q`` has level ~alpha."""
    return float(np.quantile(x, 1 - alpha, method="inverted_cdf"))


def quantile_se(x: np.ndarray, alpha: float) -> float:
    """Distribution-free standard error of :func:`upper_quantile` from order-statistic bounds."""
    n = x.size
    q = 1 - alpha
    half = 1.959963984540054 * np.sqrt(n * q * (1 - q))
    lo = int(np.clip(np.floor(n * q - half), 0, n - 1))
    hi = int(np.clip(np.ceil(n * q + half), 0, n - 1))
    xs = np.partition(x, [lo, hi])
    return float((xs[hi] - xs[lo]) / (2 * 1.959963984540054))


def null_trajectories(cfg: PowerStudyConfig, fn, reps: int | None = None) -> np.ndarray:
    """Apply ``fn`` to null trajectories on the calibration lane; concatenated in stream order."""
    reps = cfg.null_reps if reps is None else reps
    h0 = LocalParam((0.0, 0.0))

    def work(lo, hi):
        traj = simulate(cfg.env, h0, cfg.rule, cfg.seed, np.arange(lo, hi, dtype=np.uint64), NULL_LANE)
        return fn(traj)

    parts = parallel.map_chunks(work, reps, cfg.threads)
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


def null_statistic(cfg: PowerStudyConfig, test: str) -> np.ndarray:
    return null_trajectories(cfg, lambda traj: statistic(test, traj, cfg.env.sigma))


def critical_value(cfg: PowerStudyConfig, test: str) -> float:
    return upper_quantile(null_statistic(cfg, test), cfg.alpha)


def rejection_counts(cfg: PowerStudyConfig, reject, taus, reps: int | None = None) -> np.ndarray:
    """Sum over evaluation replicates of ``reject(traj, i)`` for each grid index ``i``.

    ``reject`` returns a boolean array over the replicates of one chunk. Counts
    are integers, so merging chunks is order independent.
    """
    reps = cfg.power_reps if reps is None else reps

    def work(lo, hi):
        ids = np.arange(lo, hi, dtype=np.uint64)
        eps = base_normals(cfg.env, cfg.seed, ids, EVAL_LANE)
        out = []
        for i, t in enumerate(taus):
            traj = simulate(cfg.env, cfg.local_param(t), cfg.rule, cfg.seed, ids, EVAL_LANE, eps=eps)
            out.append(reject(traj, i))
        return np.array([np.count_nonzero(r, axis=-1) for r in out])

    return np.sum(parallel.map_chunks(work, reps, cfg.threads), axis=0)


def power_at(cfg: PowerStudyConfig, test: str, crit: float, tau: float, reps: int | None = None):
    reps = cfg.power_reps if reps is None else reps
    counts = rejection_counts(cfg, lambda traj, i: statistic(test, traj, cfg.env.sigma) > crit, [tau], reps)
    p = counts[0] / reps
    return float(p), float(binomial_se(p, reps))


def power_curve(cfg: PowerStudyConfig) -> PowerCurve:
    crit = {t: critical_value(cfg, t) for t in cfg.tests}
    tests = list(cfg.tests)

    def reject(traj, i):
        return np.stack([statistic(t, traj, cfg.env.sigma) > crit[t] for t in tests])

    counts = rejection_counts(cfg, reject, cfg.tau_grid)  # (n_tau, n_tests)
    power = {t: counts[:, j] / cfg.power_reps for j, t in enumerate(tests)}
    se = {t: binomial_se(power[t], cfg.power_reps) for t in tests}
    return PowerCurve(np.asarray(cfg.tau_grid), power, se, crit, cfg)
