import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from banditlimit import rng
from banditlimit.allocation import Fixed, Thompson, WeightedThompson
from banditlimit.env import (EnvConfig, LocalParam, check_alloc, draw_batch, run_trajectory, simulate)
from banditlimit.errors import ContractViolation, DomainError, ShapeError

CFG = EnvConfig()
IDS = np.arange(1_000_000, dtype=np.uint64)


def test_config_defaults_and_validation():
    assert CFG.n_arms == 2 and CFG.batch_scale == (1.0, 1.0) and CFG.first_batch_alloc == (0.5, 0.5)
    with pytest.raises(DomainError):
        EnvConfig(sigma=(0.5, 0.0))
    with pytest.raises(DomainError):
        EnvConfig(n_batches=1)
    with pytest.raises(DomainError):
        EnvConfig(batch_scale=(1.0, -1.0))
    with pytest.raises(DomainError):
        EnvConfig(alloc_clip=0.5)
    with pytest.raises(ContractViolation):
        EnvConfig(first_batch_alloc=(0.6, 0.5))


def test_local_param():
    assert LocalParam.from_tau(2.0).h == (0.0, 2.0)
    assert LocalParam.from_tau(2.0, 0.5).h == (-1.0, 1.0)
    assert LocalParam((0.3, 1.0)).tau == pytest.approx(0.7)
    with pytest.raises(DomainError):
        LocalParam((0.0, float("inf")))


def test_check_alloc_contract():
    check_alloc(np.array([1e-6, 1 - 1e-6]), 1e-6)
    with pytest.raises(ContractViolation):
        check_alloc(np.array([0.0, 1.0]), 1e-6)
    with pytest.raises(ContractViolation):
        check_alloc(np.array([0.5, 0.5 + 1e-9]), 1e-6)


def test_draw_batch_errors_and_determinism():
    seed = rng.SeedSpec(3, 4)
    a = draw_batch(CFG, LocalParam((0, 0)), 0, (0.5, 0.5), seed)
    b = draw_batch(CFG, LocalParam((0, 0)), 0, (0.5, 0.5), seed)
    assert np.array_equal(a.z, b.z)
    with pytest.raises(ContractViolation):
        draw_batch(CFG, LocalParam((0, 0)), 0, (0.7, 0.4), seed)
    with pytest.raises(ShapeError):
        draw_batch(CFG, LocalParam((0, 0)), 2, (0.5, 0.5), seed)


def test_half_allocation_variance_is_twice_sigma_squared():
    t = simulate(CFG, LocalParam((0, 0)), Fixed(), 1, IDS)
    v = t.z[:, 0].var(axis=0, ddof=1)
    assert np.all(np.abs(v - 0.5) < 0.005)


def test_clipped_allocation_variance_is_finite():
    eps = CFG.alloc_clip
    t = simulate(CFG, LocalParam((0, 0)), Fixed((eps, 1 - eps)), 2, IDS[:100_000])
    v = t.z[:, 1, 0].var(ddof=1)
    target = 0.25 / eps
    assert np.isfinite(v)
    assert abs(v / target - 1) < 3 * np.sqrt(2 / 100_000)


def test_mean_shift():
    t = simulate(CFG, LocalParam((2, 0)), Fixed(), 5, IDS)
    assert abs(t.z[:, 0, 0].mean() - 2) < 0.01


@pytest.mark.parametrize("w", [0.2, 0.5, 0.9])
def test_variance_law_fixed_allocation(w):
    cfg = EnvConfig(sigma=(0.5, 1.5), batch_scale=(1.0, 2.0))
    n = 200_000
    t = simulate(cfg, LocalParam((0, 0)), Fixed((w, 1 - w)), 8, IDS[:n])
    for k, wk in enumerate((w, 1 - w)):
        target = cfg.sigma[k] ** 2 / (2.0 * wk)
        v = t.z[:, 1, k].var(ddof=1)
        assert abs(v - target) < 3 * target * np.sqrt(2 / (n - 1))


def test_conditional_independence_within_batch():
    t = simulate(CFG, LocalParam((0, 0)), Fixed((0.3, 0.7)), 9, IDS[:500_000])
    for b in range(2):
        assert abs(np.corrcoef(t.z[:, b, 0], t.z[:, b, 1])[0, 1]) < 4 / np.sqrt(500_000)


def test_fixed_rule_trajectory():
    tr = run_trajectory(CFG, LocalParam((0, 1)), Fixed(), rng.SeedSpec(1, 2))
    assert len(tr.batches) == 2
    for bd in tr.batches:
        assert np.array_equal(bd.alloc, [0.5, 0.5])


def test_thompson_second_allocation_is_uniform_under_null():
    t = simulate(CFG, LocalParam((0, 0)), Thompson(), 11, IDS[:100_000])
    lam = t.alloc[:, 1, 0]
    assert stats.kstest(lam, "uniform").statistic < 0.01
    assert abs(lam.mean() - 0.5) < 0.005
    assert np.array_equal(t.alloc[:, 0], np.full((100_000, 2), 0.5))


def test_single_trajectory_matches_batch_row():
    batch = simulate(CFG, LocalParam((0, 1)), Thompson(), 21, np.arange(10, 20))
    tr = run_trajectory(CFG, LocalParam((0, 1)), Thompson(), rng.SeedSpec(21, 15))
    assert np.array_equal(tr.z, batch[5].z) and np.array_equal(tr.alloc, batch[5].alloc)


def test_draw_batch_uses_same_innovations_as_simulate():
    seed = rng.SeedSpec(4, 77)
    tr = run_trajectory(CFG, LocalParam((0.2, 1.0)), Fixed(), seed)
    bd = draw_batch(CFG, LocalParam((0.2, 1.0)), 1, (0.5, 0.5), seed)
    assert np.array_equal(bd.z, tr.z[1])


@settings(max_examples=40, deadline=None)
@given(st.floats(-50, 50), st.sampled_from(["fixed", "thompson", "weighted"]), st.integers(0, 2**32))
def test_common_shift_equivariance(c, kind, seed):
    rule = {"fixed": Fixed((0.3, 0.7)), "thompson": Thompson(), "weighted": WeightedThompson(0.1)}[kind]
    ids = np.arange(64)
    base = simulate(CFG, LocalParam((0.0, 1.0)), rule, seed, ids)
    shifted = simulate(CFG, LocalParam((c, 1.0 + c)), rule, seed, ids)
    # allocations depend only on differences, so they agree up to rounding in the shifted means
    assert np.allclose(shifted.alloc, base.alloc, rtol=0, atol=1e-9)
    assert np.allclose(shifted.z - c, base.z, rtol=0, atol=1e-9 * (1 + abs(c)) * 1e3)
    if kind == "fixed":
        assert np.array_equal(shifted.alloc, base.alloc)
