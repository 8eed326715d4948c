import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from banditlimit import rng
from banditlimit.errors import DomainError, OmittedBlockError, ShapeError
from banditlimit.fixed_info import (COST_PRESETS, InfoPartition, TimeGrid, compound_risk, draw_limit_experiment,
                                    reconstruct_w, reconstruction_error, sample_brownian, split_sample_estimator)

HALVES = InfoPartition(0.5, 0.5, 0.0)
GRID = (0.2, 0.5, 0.8, 1.0)


def test_partition_validation():
    with pytest.raises(DomainError):
        InfoPartition(0.6, 0.6, 0.0)
    with pytest.raises(DomainError):
        InfoPartition(-0.1, 0.5, 0.0)
    with pytest.raises(DomainError):
        InfoPartition(0.5, 0.5, 0.0, J0=0)


def test_omitted_block():
    d = draw_limit_experiment(HALVES, 0.0, rng.SeedSpec(1))
    assert isinstance(d.z1, float)
    with pytest.raises(OmittedBlockError):
        d.z12
    with pytest.raises(OmittedBlockError):
        draw_limit_experiment(HALVES, 0.0, rng.SeedSpec(1), blocks=("12",))


def test_halves_are_iid_with_variance_two():
    n = 1_000_000
    d = draw_limit_experiment(HALVES, 0.0, rng.SeedSpec(2), n=n)
    for z in (d.z1, d.z2):
        assert abs(z.var() - 2) < 3 * 2 * np.sqrt(2 / n)
        assert stats.kstest(z, "norm", args=(0, np.sqrt(2))).pvalue > 0.001
    assert abs(np.corrcoef(d.z1, d.z2)[0, 1]) < 0.003


def test_mean_shift_all_blocks():
    p = InfoPartition(0.3, 0.2, 0.5, J0=2.0)
    n = 1_000_000
    d = draw_limit_experiment(p, 5.0, rng.SeedSpec(3), n=n)
    for b, z in d.blocks.items():
        sd = 1 / np.sqrt(p.mass(b) * p.J0)
        assert abs(z.mean() - 5) < 3 * sd / 1e3


def test_grid_validation():
    for bad in [(), (0.0, 1.0), (0.5, 0.4), (0.5, 1.2)]:
        with pytest.raises(DomainError):
            TimeGrid(bad)


def test_bridge_endpoint_and_covariance():
    path = sample_brownian(TimeGrid(GRID), rng.SeedSpec(4), 1_000_000)
    assert np.all(path.V[:, -1] == 0.0)
    cov = np.cov(path.B, rowvar=False)
    t = np.array(GRID)
    assert np.all(np.abs(cov - np.minimum.outer(t, t)) < 0.01)


@pytest.mark.parametrize("h", [0.0, 3.0])
def test_bridge_independent_of_endpoint(h):
    path = sample_brownian(TimeGrid(GRID, h=h), rng.SeedSpec(5), 1_000_000)
    for j in range(len(GRID) - 1):
        assert abs(np.corrcoef(path.V[:, j], path.W[:, -1])[0, 1]) < 0.003


def test_bridge_does_not_depend_on_drift():
    a = sample_brownian(TimeGrid(GRID, h=0.0), rng.SeedSpec(6), 100)
    b = sample_brownian(TimeGrid(GRID, h=3.0), rng.SeedSpec(6), 100)
    assert np.array_equal(a.V, b.V)


def test_reconstruct_examples():
    g = TimeGrid(GRID)
    assert reconstruct_w(g, 2.0, np.zeros(3), 1) == pytest.approx(0.5 / 0.8 * 2.0)
    path = sample_brownian(g, rng.SeedSpec(7), 10)
    # last index: V(t_D) = 0 leaves W(t_c) = (t_c/t_D) W(t_D) + V(t_c)
    r = reconstruct_w(g, path.W[:, -1], path.V, 0)
    assert np.allclose(r, 0.2 * path.W[:, -1] + path.V[:, 0], atol=1e-15)
    with pytest.raises(ShapeError):
        reconstruct_w(g, 1.0, np.zeros(2), 1)
    with pytest.raises(ShapeError):
        reconstruct_w(g, 1.0, np.zeros(5), 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6, unique=True),
       st.floats(-5, 5), st.floats(0.1, 10), st.integers(0, 2**32))
def test_reconstruction_identity(times, h, J0, seed):
    times = sorted(times)
    assume_ok = all(b - a > 1e-6 for a, b in zip(times, times[1:]))
    if not assume_ok:
        return
    path = sample_brownian(TimeGrid(tuple(times), J0, h), rng.SeedSpec(seed), 50)
    assert reconstruction_error(path) < 1e-12


def test_nested_grid_consistency():
    n = 200_000
    coarse = sample_brownian(TimeGrid((0.5, 1.0), h=1.0), rng.SeedSpec(8), n)
    fine = sample_brownian(TimeGrid((0.25, 0.5, 0.75, 1.0), h=1.0), rng.SeedSpec(9), n)
    for jc, jf in ((0, 1), (1, 3)):
        assert stats.ks_2samp(coarse.W[:, jc], fine.W[:, jf]).pvalue > 0.001


def test_risk_oracles():
    seed = rng.SeedSpec(10)
    n = 1_000_000
    r0, se0 = compound_risk(split_sample_estimator, HALVES, 0.0, COST_PRESETS["zero"], n, seed, return_se=True)
    assert abs(r0 - 4) < 3 * se0
    rq, seq = compound_risk(split_sample_estimator, HALVES, 1.0, COST_PRESETS["quadratic"], n, seed, return_se=True)
    assert abs(rq - 8) < 3 * seq
    oracle = compound_risk(lambda z1, z2, z12, u: (2.0, 2.0), HALVES, 2.0, COST_PRESETS["zero"], 1000, seed)
    assert oracle == 0.0


def test_risk_receives_uniforms():
    seen = {}

    def est(z1, z2, z12, u):
        seen["u"] = u
        assert z12 is None
        return z1, z2

    compound_risk(est, HALVES, 0.0, COST_PRESETS["absolute"], 1000, rng.SeedSpec(11))
    assert seen["u"].shape == (1000,) and np.all((seen["u"] > 0) & (seen["u"] < 1))
