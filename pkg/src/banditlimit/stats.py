"""End-of-sample test statistics for two-arm, two-batch trajectories.

All functions accept a single :class:`~banditlimit.env.Trajectory` or a
:class:`~banditlimit.env.TrajectoryBatch` and return a float or an array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

TEST_NAMES = ("zjm", "pooled_dim")


@dataclass(frozen=True)
class DiffStats:
    w1: np.ndarray
    w2: np.ndarray
    lambda2: np.ndarray


def _check_two_by_two(traj) -> None:
    if traj.z.shape[-2:] != (2, 2):
        raise ShapeError(f"expected a two-batch, two-arm trajectory, got {traj.z.shape[-2:]}")


def compute_w(traj) -> DiffStats:
    """Batchwise treated-minus-control differences and the batch-2 control share."""
    _check_two_by_two(traj)
    z = traj.z
    return DiffStats(z[..., 0, 1] - z[..., 0, 0], z[..., 1, 1] - z[..., 1, 0], traj.alloc[..., 1, 0])


def zjm_parts(d: DiffStats, sigma):
    s0, s1 = (float(s) ** 2 for s in sigma)
    lam = np.asarray(d.lambda2)
    first = np.asarray(d.w1) / np.sqrt(2 * (s0 + s1))
    second = np.asarray(d.w2) / np.sqrt(s0 / lam + s1 / (1 - lam))
    return first, second


def zjm_statistic(d: DiffStats, sigma):
    """Batchwise-studentized sum of the two differences; N(0, 1) under the null."""
    first, second = zjm_parts(d, sigma)
    out = (first + second) / np.sqrt(2.0)
    return float(out) if np.ndim(out) == 0 else out


def pooled_dim(traj):
    """Difference in arm means after pooling both batches.

    Only defined for the half-half first batch with equal batch sizes.
    """
    _check_two_by_two(traj)
    if np.any(traj.alloc[..., 0, :] != 0.5):
        raise ShapeError("pooled_dim requires a 50-50 first batch")
    z = traj.z
    lam = traj.alloc[..., 1, 0]
    treated = (0.5 * z[..., 0, 1] + (1 - lam) * z[..., 1, 1]) / (0.5 + (1 - lam))
    control = (0.5 * z[..., 0, 0] + lam * z[..., 1, 0]) / (0.5 + lam)
    out = treated - control
    return float(out) if np.ndim(out) == 0 else out


def statistic(name: str, traj, sigma):
    if name == "zjm":
        return zjm_statistic(compute_w(traj), sigma)
    if name == "pooled_dim":
        return pooled_dim(traj)
    raise KeyError(f"unknown statistic {name!r}; expected one of {', '.join(TEST_NAMES)}")
