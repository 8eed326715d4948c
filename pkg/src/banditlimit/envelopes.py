"""Neyman-Pearson power envelopes for the two-arm, two-batch limit bandit.

For each alternative the most powerful level-alpha test of ``h = (0, 0)``
rejects for large log likelihood ratios. Because batch-2 variances depend only
on batch-1 data, they cancel from the ratio and only mean shifts remain.

* ``limited``: the test sees only ``(W1, W2)``.
* ``full``: the test sees all four coordinates ``(Z1, Z2)``.

The null ``h0 == h1`` is composite in the full data. By default the full
envelope is taken over tests invariant to a common shift of all four
observations (every difference-based test is); integrating the shift out of
the Gaussian likelihood leaves a ratio that depends on ``tau`` only. Setting
``full_null="point"`` instead tests the simple null ``(0, 0)`` against the
alternative realized by ``alt_split``.

At ``tau = 0`` the likelihood ratio is identically one; the envelope there is
the tau -> 0 limit of the NP tests, i.e. the score test, which has power alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import LocalParam
from .errors import DomainError, RuleUndefinedError
from .power import PowerStudyConfig, binomial_se, null_trajectories, rejection_counts, upper_quantile
from .stats import DiffStats, compute_w

KINDS = ("limited", "full")


@dataclass(frozen=True)
class EnvelopePoint:
    tau: float
    kind: str
    power: float
    se: float
    crit: float


def _diff_variances(d: DiffStats, sigma):
    s0, s1 = (float(s) ** 2 for s in sigma)
    lam = np.asarray(d.lambda2)
    return 2 * (s0 + s1), s0 / lam + s1 / (1 - lam)


def _require_measurable(rule) -> None:
    if rule is not None and not getattr(rule, "w1_measurable", False):
        raise RuleUndefinedError(f"rule {rule.name!r} is not a function of the first-batch difference")


def loglr_limited(w: DiffStats, tau: float, sigma, rule=None):
    """Log LR of ``tau`` against 0 from ``(W1, W2)``; linear in both differences."""
    _require_measurable(rule)
    v1, v2 = _diff_variances(w, sigma)
    out = tau * (np.asarray(w.w1) / v1 + np.asarray(w.w2) / v2) - 0.5 * tau**2 * (1 / v1 + 1 / v2)
    return float(out) if np.ndim(out) == 0 else out


def _precisions(traj, sigma):
    # batch scales are one in the two-batch design
    return traj.alloc / np.square(np.asarray(sigma, dtype=float))


def loglr_full(traj, h_alt: LocalParam, sigma, rule=None):
    """Log LR of ``h_alt`` against ``(0, 0)`` from all four observations."""
    _require_measurable(rule)
    h = np.asarray(h_alt.h)
    prec = _precisions(traj, sigma)
    out = np.sum(prec * (h * traj.z - 0.5 * h**2), axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def loglr_full_invariant(traj, tau: float, sigma, rule=None):
    """Log LR of ``tau`` against 0 for the maximal invariant under common shifts.

    With per-observation precisions ``P`` and direction ``a`` (1 on arm 1),
    this is ``tau * B(z, a) - tau**2 / 2 * B(a, a)`` where ``B`` is the
    P-weighted inner product after removing the P-weighted mean.
    """
    _require_measurable(rule)
    b_za, b_aa = _invariant_terms(traj, sigma)
    out = tau * b_za - 0.5 * tau**2 * b_aa
    return float(out) if np.ndim(out) == 0 else out


def _invariant_terms(traj, sigma):
    prec = _precisions(traj, sigma)
    a = np.array([0.0, 1.0])
    tot = prec.sum(axis=(-2, -1))
    pz = (prec * traj.z).sum(axis=(-2, -1))
    pa = (prec * a).sum(axis=(-2, -1))
    pza = (prec * a * traj.z).sum(axis=(-2, -1))
    return pza - pz * pa / tot, pa - pa * pa / tot


def score_limited(w: DiffStats, sigma):
    v1, v2 = _diff_variances(w, sigma)
    return np.asarray(w.w1) / v1 + np.asarray(w.w2) / v2


def score_full(traj, direction: LocalParam, sigma):
    a = np.asarray(direction.h)
    return np.sum(_precisions(traj, sigma) * a * traj.z, axis=(-2, -1))


def envelope_statistic(kind: str, traj, tau: float, cfg: PowerStudyConfig):
    """NP test statistic at ``tau``; the score statistic at ``tau == 0``."""
    sigma = cfg.env.sigma
    if kind == "limited":
        d = compute_w(traj)
        return score_limited(d, sigma) if tau == 0 else loglr_limited(d, tau, sigma)
    if kind == "full" and cfg.full_null == "invariant":
        if tau == 0:
            return _invariant_terms(traj, sigma)[0]
        return loglr_full_invariant(traj, tau, sigma)
    if kind == "full":
        if tau == 0:
            return score_full(traj, cfg.local_param(1.0), sigma)
        return loglr_full(traj, cfg.local_param(tau), sigma)
    raise DomainError(f"unknown envelope kind {kind!r}")


def envelope_crits(cfg: PowerStudyConfig, kind: str) -> np.ndarray:
    """Null critical value of the NP statistic at every grid point."""
    _require_measurable(cfg.rule)
    z, alloc = null_trajectories(cfg, lambda traj: (traj.z, traj.alloc))
    null = _Arrays(z, alloc)
    return np.array([upper_quantile(envelope_statistic(kind, null, t, cfg), cfg.alpha)
                     for t in cfg.tau_grid])


@dataclass(frozen=True)
class _Arrays:
    z: np.ndarray
    alloc: np.ndarray


def envelope_curve(cfg: PowerStudyConfig, kind: str) -> list:
    if kind not in KINDS:
        raise DomainError(f"unknown envelope kind {kind!r}")
    crits = envelope_crits(cfg, kind)

    def reject(traj, i):
        return envelope_statistic(kind, traj, cfg.tau_grid[i], cfg) > crits[i]

    counts = rejection_counts(cfg, reject, cfg.tau_grid)
    power = counts / cfg.power_reps
    se = binomial_se(power, cfg.power_reps)
    return [EnvelopePoint(t, kind, float(p), float(s), float(c))
            for t, p, s, c in zip(cfg.tau_grid, power, se, crits)]
