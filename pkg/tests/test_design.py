import math

import numpy as np
import pytest

from hamscan import bounds
from hamscan.design import (
    ExperimentDesign,
    pgh_design,
    place_window,
    truncation_time_cap,
)
from hamscan.errors import DegeneratePrior
from hamscan.model import DEFAULT_ALPHA, Window
from hamscan.smc import ParticleCloud


class TestPghDesign:
    def test_reciprocal_l1_distance(self):
        cloud = ParticleCloud.uniform(np.array([[0.0, 0.0], [0.5, 0.0]]))
        rng = np.random.default_rng(0)
        win = Window(0, 2, 0, 1)
        design = pgh_design(rng, cloud, win)
        assert design.t == pytest.approx(2.0)
        assert design.win == win

    def test_cap_applies(self):
        cloud = ParticleCloud.uniform(np.array([[0.0, 0.0], [0.5, 0.0]]))
        rng = np.random.default_rng(1)
        design = pgh_design(rng, cloud, Window(0, 2, 0, 1), cap=1.0)
        assert design.t == pytest.approx(1.0)

    def test_hypothesis_is_a_particle(self):
        rng = np.random.default_rng(2)
        particles = rng.normal(size=(20, 3))
        cloud = ParticleCloud.uniform(particles)
        design = pgh_design(rng, cloud, Window(0, 3, 0, 2))
        assert any(np.array_equal(design.x_inv, p) for p in particles)

    def test_identical_draws_get_perturbed(self):
        cloud = ParticleCloud.uniform(np.zeros((5, 2)))
        rng = np.random.default_rng(3)
        design = pgh_design(rng, cloud, Window(0, 2, 0, 1))
        assert np.isfinite(design.t) and design.t > 0

    def test_needs_two_weighted_particles(self):
        cloud = ParticleCloud(np.zeros((3, 1)), np.array([1.0, 0.0, 0.0]))
        with pytest.raises(DegeneratePrior):
            pgh_design(np.random.default_rng(4), cloud, Window(0, 2, 0, 1))

    def test_time_scales_inversely_with_spread(self):
        # shrinking the cloud scale by 100x should raise the median guess
        # time by about 100x (L1 distance of draws scales linearly)
        rng = np.random.default_rng(5)
        win = Window(0, 3, 0, 2)
        medians = []
        for scale in (1.0, 0.01):
            times = []
            for _ in range(1000):
                cloud = ParticleCloud.uniform(rng.normal(0, scale, size=(64, 3)))
                times.append(pgh_design(rng, cloud, win).t)
            medians.append(np.median(times))
        ratio = medians[1] / medians[0]
        assert 50 <= ratio <= 200

    def test_design_validation(self):
        with pytest.raises(ValueError):
            ExperimentDesign(Window(0, 2, 0, 1), np.zeros(1), t=0.0)
        with pytest.raises(ValueError):
            ExperimentDesign(Window(0, 2, 0, 1), np.zeros(1), t=1.0, r=0)

    def test_guess_times_rise_as_posterior_narrows(self):
        # epistemic-velocity proxy: over a convergence run the chosen times
        # anti-correlate with the posterior covariance trace
        from scipy.stats import spearmanr

        from hamscan.errors import AllWeightsZero
        from hamscan.likelihood import WindowLikelihood, sample_datum
        from hamscan.model import PriorSpec, local_pairs, pair_index
        from hamscan.smc import (
            ParticleCloud,
            ResampleConfig,
            bayes_update,
            effective_sample_size,
            liu_west_resample,
            posterior_cov,
        )

        rng = np.random.default_rng(21)
        n = 8
        win = place_window(n, 2, 4, 3)
        prior = PriorSpec()
        x_true = prior.sample(rng, n)
        pairs = local_pairs(win)
        draws = prior.sample_matrix(rng, n, 1000)
        cols = [pair_index(n, i, j) for i, j in pairs]
        cloud = ParticleCloud.uniform(draws[:, cols])
        evaluator = WindowLikelihood(win)
        cfg = ResampleConfig()
        times, traces = [], []
        for _ in range(300):
            design = pgh_design(rng, cloud, win)
            datum = sample_datum(rng, x_true, design.x_inv, win, design.t)
            probs = evaluator.prob(cloud.particles, design.x_inv, design.t)
            try:
                cloud = bayes_update(cloud, datum, probs)
            except AllWeightsZero:
                continue
            if effective_sample_size(cloud) < cfg.ess_threshold * cloud.size:
                cloud = liu_west_resample(rng, cloud, cfg)
            times.append(design.t)
            traces.append(np.trace(posterior_cov(cloud)))
        rho, _ = spearmanr(times, traces)
        assert rho < -0.5


class TestTruncationTimeCap:
    def test_formula_value(self):
        # ||H_x|| = 0.005, budget 0.01, unit observable -> ~0.995
        cap = bounds.max_time_commuting(0.01, 1.0, 0.005)
        assert cap == pytest.approx(math.log(1.01) / 0.01, rel=1e-12)
        assert cap == pytest.approx(0.995, abs=1e-3)

    def test_infinite_when_interaction_vanishes(self):
        assert bounds.max_time_commuting(0.01, 1.0, 0.0) == math.inf

    def test_widening_window_by_two_scales_cap_hundredfold(self):
        win_small = Window(0, 8, 2, 6)
        win_large = Window(0, 10, 3, 7)
        decay = (1.0, DEFAULT_ALPHA)
        small = truncation_time_cap(win_small, decay)
        large = truncation_time_cap(win_large, decay)
        assert large / small == pytest.approx(100.0, rel=1e-9)

    def test_uses_envelope_bound(self):
        win = Window(0, 8, 2, 6)
        decay = (1.0, DEFAULT_ALPHA)
        h = bounds.window_interaction_norm_exp(4, 8, 1.0, DEFAULT_ALPHA)
        expected = bounds.max_time_commuting(0.01, 1.0, h)
        assert truncation_time_cap(win, decay, 0.01) == pytest.approx(expected)

    def test_rejects_bad_budget(self):
        with pytest.raises(ValueError):
            truncation_time_cap(Window(0, 4, 1, 3), (1.0, 1.0), delta_trunc=0.0)


class TestPlaceWindow:
    def test_left_clamp(self):
        win = place_window(50, 4, 8, 0)
        assert (win.lo, win.hi, win.a_lo, win.a_hi) == (0, 8, 0, 4)

    def test_centered(self):
        win = place_window(50, 4, 8, 23)
        assert (win.lo, win.hi, win.a_lo, win.a_hi) == (21, 29, 23, 27)

    def test_right_clamp(self):
        win = place_window(50, 4, 8, 46)
        assert (win.lo, win.hi, win.a_lo, win.a_hi) == (42, 50, 46, 50)

    def test_width_is_min_of_w_and_n(self):
        win = place_window(6, 2, 10, 3)
        assert win.width == 6

    def test_invalid_geometry(self):
        with pytest.raises(ValueError):
            place_window(10, 4, 2, 0)
        with pytest.raises(ValueError):
            place_window(10, 2, 4, 9)

    def test_support_always_contained(self):
        for n, a, w in [(12, 4, 8), (9, 3, 5), (7, 2, 7)]:
            for pos in range(n - a + 1):
                win = place_window(n, a, w, pos)
                assert win.lo <= win.a_lo and win.a_hi <= win.hi
                assert win.width == min(w, n)
