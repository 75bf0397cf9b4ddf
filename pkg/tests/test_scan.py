import numpy as np
import pytest

from hamscan.errors import NonUniformLocal
from hamscan.model import CouplingVector, PriorSpec, all_pairs, local_pairs, pair_index
from hamscan.design import place_window
from hamscan.scan import (
    DatumSource,
    GlobalCloud,
    ScanConfig,
    ScanSchedule,
    SimulatedIsingSource,
    extract_local,
    merge_local,
    run_scan,
    scan_estimate,
)
from hamscan.smc import ParticleCloud


class TestScanSchedule:
    def test_default_positions(self):
        sched = ScanSchedule(n=12, a=4, w=8, experiments_per_scan=10)
        assert sched.positions == list(range(9)) + [4, 3, 2, 1, 0]

    def test_reverse_sweep_covers_first_two_supports(self):
        sched = ScanSchedule(n=50, a=4, w=8, experiments_per_scan=1)
        assert len(sched.positions) == (50 - 4 + 1) + (4 + 1)
        tail = sched.positions[-5:]
        assert tail == [4, 3, 2, 1, 0]

    def test_override_positions(self):
        sched = ScanSchedule(n=10, a=2, w=4, experiments_per_scan=1, positions=[3, 1])
        assert sched.positions == [3, 1]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ScanSchedule(n=10, a=2, w=4, experiments_per_scan=1, positions=[9])


class TestExtractLocal:
    def test_whole_chain_support(self):
        rng = np.random.default_rng(0)
        cloud = GlobalCloud.from_prior(rng, PriorSpec(), 5, 10)
        win = place_window(5, 5, 5, 0)
        local = extract_local(cloud, win)
        assert local.dim == len(all_pairs(5))
        np.testing.assert_array_equal(local.particles, cloud.particles)

    def test_support_equals_window(self):
        rng = np.random.default_rng(1)
        cloud = GlobalCloud.from_prior(rng, PriorSpec(), 8, 6)
        win = place_window(8, 3, 3, 2)  # w == a: only in-support pairs
        local = extract_local(cloud, win)
        assert local.dim == 3  # (2,3), (2,4), (3,4)
        assert set(local_pairs(win)) == {(2, 3), (2, 4), (3, 4)}

    def test_enumerated_pair_set(self):
        win = place_window(6, 2, 4, 1)
        # window [0,4), support [1,3): pairs inside the window touching it
        expected = {(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)}
        assert set(local_pairs(win)) == expected

    def test_extract_is_a_copy(self):
        rng = np.random.default_rng(2)
        cloud = GlobalCloud.from_prior(rng, PriorSpec(), 6, 4)
        win = place_window(6, 2, 4, 1)
        local = extract_local(cloud, win)
        local.particles[0, 0] = 123.0
        assert cloud.particles[0, pair_index(6, 0, 1)] != 123.0


class TestMergeLocal:
    def test_roundtrip_preserves_multiset(self):
        rng = np.random.default_rng(3)
        cloud = GlobalCloud.from_prior(rng, PriorSpec(), 6, 8)
        win = place_window(6, 2, 4, 1)
        local = extract_local(cloud, win)
        merged = merge_local(cloud, local, win, rng)
        idx = [pair_index(6, i, j) for i, j in local_pairs(win)]
        original = {tuple(row) for row in cloud.particles[:, idx]}
        after = {tuple(row) for row in merged.particles[:, idx]}
        assert original == after

    def test_untouched_coordinates_bit_identical(self):
        rng = np.random.default_rng(4)
        cloud = GlobalCloud.from_prior(rng, PriorSpec(), 7, 9)
        win = place_window(7, 2, 4, 2)
        local = extract_local(cloud, win)
        local.particles += rng.normal(size=local.particles.shape)
        merged = merge_local(cloud, local, win, rng)
        idx = set(pair_index(7, i, j) for i, j in local_pairs(win))
        others = [k for k in range(len(all_pairs(7))) if k not in idx]
        np.testing.assert_array_equal(
            merged.particles[:, others], cloud.particles[:, others]
        )

    def test_marginal_mean_matches_local_mean(self):
        rng = np.random.default_rng(5)
        cloud = GlobalCloud.from_prior(rng, PriorSpec(), 6, 50)
        win = place_window(6, 2, 4, 3)
        local = extract_local(cloud, win)
        local.particles[:] = rng.normal(size=local.particles.shape)
        merged = merge_local(cloud, local, win, rng)
        idx = [pair_index(6, i, j) for i, j in local_pairs(win)]
        np.testing.assert_allclose(
            merged.particles[:, idx].mean(axis=0),
            local.particles.mean(axis=0),
            atol=1e-14,
        )

    def test_disjoint_windows_commute_as_multisets(self):
        rng = np.random.default_rng(6)
        cloud = GlobalCloud.from_prior(rng, PriorSpec(), 10, 12)
        win_a = place_window(10, 2, 2, 0)
        win_b = place_window(10, 2, 2, 8)
        loc_a = extract_local(cloud, win_a)
        loc_b = extract_local(cloud, win_b)
        loc_a.particles += 1.0
        loc_b.particles += 2.0
        perm_a = np.random.default_rng(7).permutation(12)
        perm_b = np.random.default_rng(8).permutation(12)
        ab = merge_local(
            merge_local(cloud, loc_a, win_a, rng, permutation=perm_a),
            loc_b, win_b, rng, permutation=perm_b,
        )
        ba = merge_local(
            merge_local(cloud, loc_b, win_b, rng, permutation=perm_b),
            loc_a, win_a, rng, permutation=perm_a,
        )
        assert {tuple(r) for r in ab.particles} == {tuple(r) for r in ba.particles}

    def test_rejects_non_uniform_local(self):
        rng = np.random.default_rng(11)
        cloud = GlobalCloud.from_prior(rng, PriorSpec(), 6, 4)
        win = place_window(6, 2, 4, 1)
        local = extract_local(cloud, win)
        skewed = ParticleCloud(local.particles, np.array([0.4, 0.3, 0.2, 0.1]))
        with pytest.raises(NonUniformLocal):
            merge_local(cloud, skewed, win, rng)


class _AlwaysFailSource(DatumSource):
    """Reports an outcome that is impossible under every particle."""

    def sample(self, rng, x_inv, win, t):
        return 0  # particles all equal x_inv -> Pr(pass)=1 -> weight 1-1=0


class TestRunScan:
    def test_zero_experiments_keeps_particle_multiset(self):
        rng = np.random.default_rng(12)
        prior = PriorSpec()
        cloud = GlobalCloud.from_prior(rng, prior, 8, 20)
        sched = ScanSchedule(n=8, a=2, w=4, experiments_per_scan=0)
        x_true = prior.sample(rng, 8)
        final, trace = run_scan(
            SimulatedIsingSource(x_true), cloud, sched, ScanConfig(), rng
        )
        assert trace == []
        assert final.size == cloud.size
        # columns shuffle within windows, but each window merge copies the
        # extracted multiset back, so the per-column multisets survive
        for k in range(cloud.particles.shape[1]):
            assert sorted(final.particles[:, k]) == pytest.approx(
                sorted(cloud.particles[:, k])
            )

    def test_particle_count_constant_and_errors_decrease(self):
        rng = np.random.default_rng(13)
        prior = PriorSpec()
        n = 8
        x_true = prior.sample(rng, n)
        cloud = GlobalCloud.from_prior(rng, prior, n, 600)
        sched = ScanSchedule(n=n, a=2, w=4, experiments_per_scan=40)
        final, trace = run_scan(
            SimulatedIsingSource(x_true), cloud, sched, ScanConfig(), rng, truth=x_true
        )
        assert final.size == 600
        assert len(trace) == len(sched.positions) * 40
        first = np.mean([r.l2_error for r in trace[:40]])
        last = np.mean([r.l2_error for r in trace[-40:]])
        assert last < first

    def test_trace_rows_carry_nan_without_truth(self):
        rng = np.random.default_rng(14)
        prior = PriorSpec()
        x_true = prior.sample(rng, 6)
        cloud = GlobalCloud.from_prior(rng, prior, 6, 50)
        sched = ScanSchedule(n=6, a=2, w=4, experiments_per_scan=2, positions=[0])
        _, trace = run_scan(SimulatedIsingSource(x_true), cloud, sched, ScanConfig(), rng)
        assert all(np.isnan(r.l2_error) and np.isnan(r.l1_opnorm_bound) for r in trace)

    def test_impossible_data_aborts_position_and_restores_cloud(self, caplog):
        rng = np.random.default_rng(15)
        n = 6
        particle = PriorSpec().sample(rng, n)
        # all particles identical: the hypothesis always equals the particle,
        # so Pr(pass) == 1 for the whole cloud and datum 0 zeroes every weight
        cloud = GlobalCloud(n, np.tile(particle.values, (30, 1)))
        sched = ScanSchedule(n=n, a=2, w=4, experiments_per_scan=3, positions=[1])
        with caplog.at_level("WARNING"):
            final, trace = run_scan(
                _AlwaysFailSource(), cloud, sched, ScanConfig(), rng
            )
        assert "update failed" in caplog.text
        np.testing.assert_array_equal(final.particles, cloud.particles)

    def test_sampled_likelihood_mode_runs(self):
        rng = np.random.default_rng(16)
        prior = PriorSpec()
        x_true = prior.sample(rng, 6)
        cloud = GlobalCloud.from_prior(rng, prior, 6, 100)
        sched = ScanSchedule(n=6, a=2, w=4, experiments_per_scan=5, positions=[0, 1])
        cfg = ScanConfig(likelihood_mode="sampled", n_samp=64)
        final, trace = run_scan(
            SimulatedIsingSource(x_true), cloud, sched, cfg, rng, truth=x_true
        )
        assert len(trace) == 10

    def test_estimate_is_cloud_mean(self):
        cloud = GlobalCloud(4, np.arange(12.0).reshape(2, 6))
        est = scan_estimate(cloud)
        np.testing.assert_allclose(est.values, cloud.particles.mean(axis=0))
