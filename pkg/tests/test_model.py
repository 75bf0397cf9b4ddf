import numpy as np
import pytest

from hamscan.model import (
    CouplingVector,
    PriorSpec,
    Window,
    all_pairs,
    local_pairs,
    num_pairs,
    op_norm_diag,
    pair_index,
    param_error_l2,
)


class TestPairs:
    def test_index_matches_enumeration(self):
        for n in (2, 3, 5, 8):
            for k, (i, j) in enumerate(all_pairs(n)):
                assert pair_index(n, i, j) == k
            assert len(all_pairs(n)) == num_pairs(n)

    def test_index_rejects_bad_pairs(self):
        with pytest.raises(ValueError):
            pair_index(4, 2, 2)
        with pytest.raises(ValueError):
            pair_index(4, 1, 4)


class TestCouplingVector:
    def test_requires_full_pair_set(self):
        with pytest.raises(ValueError):
            CouplingVector(4, np.zeros(5))

    def test_rejects_non_finite(self):
        values = np.zeros(num_pairs(4))
        values[2] = np.inf
        with pytest.raises(ValueError):
            CouplingVector(4, values)

    def test_arithmetic(self):
        rng = np.random.default_rng(0)
        x = CouplingVector(5, rng.normal(size=num_pairs(5)))
        y = CouplingVector(5, rng.normal(size=num_pairs(5)))
        np.testing.assert_allclose(x.add(y).values, x.values + y.values)
        np.testing.assert_allclose(x.subtract(y).values, x.values - y.values)
        np.testing.assert_allclose(x.scale(-2.0).values, -2.0 * x.values)

    def test_restrict_orders_as_requested(self):
        x = CouplingVector.from_pairs(4, {(0, 1): 1.0, (1, 2): 2.0, (0, 3): 3.0})
        np.testing.assert_array_equal(x.restrict([(1, 2), (0, 3)]), [2.0, 3.0])

    def test_get_is_symmetric(self):
        x = CouplingVector.from_pairs(4, {(1, 3): 5.0})
        assert x.get(3, 1) == 5.0


class TestWindow:
    def test_valid_geometry(self):
        win = Window(2, 8, 3, 5)
        assert win.width == 6
        assert win.a_width == 2
        assert list(win.a_sites) == [3, 4]

    @pytest.mark.parametrize("args", [(3, 2, 3, 4), (0, 4, 2, 6), (1, 4, 0, 2)])
    def test_invalid_geometry(self, args):
        with pytest.raises(ValueError):
            Window(*args)

    def test_local_pairs_touch_support(self):
        win = Window(1, 5, 2, 4)
        pairs = local_pairs(win)
        for i, j in pairs:
            assert win.contains_site(i) and win.contains_site(j)
            assert win.in_a(i) or win.in_a(j)
        # every qualifying pair present exactly once
        expected = {
            (i, j)
            for i in range(1, 5)
            for j in range(i + 1, 5)
            if 2 <= i < 4 or 2 <= j < 4
        }
        assert set(pairs) == expected
        assert len(pairs) == len(expected)


class TestPriorSpec:
    def test_envelope_matches_decade_decay(self):
        prior = PriorSpec()
        for d in (1, 2, 3, 4):
            assert prior.envelope(d) == pytest.approx(10.0 ** (-2 * (d - 1)), rel=1e-12)

    def test_draws_respect_envelope(self):
        prior = PriorSpec()
        rng = np.random.default_rng(1)
        x = prior.sample(rng, 10)
        for k, (i, j) in enumerate(all_pairs(10)):
            assert 0.0 <= x.values[k] <= prior.envelope(j - i)

    def test_crosstalk_adds_strong_nearest_neighbor(self):
        prior = PriorSpec(kind="crosstalk-control", control=3)
        rng = np.random.default_rng(2)
        x = prior.sample(rng, 8)
        assert 10.0 <= x.get(3, 4) <= 11.0
        assert x.get(2, 3) <= 1.0

    def test_mean_is_half_envelope(self):
        prior = PriorSpec()
        mu = prior.mean(6)
        for k, (i, j) in enumerate(all_pairs(6)):
            assert mu.values[k] == pytest.approx(0.5 * prior.envelope(j - i))

    def test_sample_matrix_matches_scalar_distribution(self):
        prior = PriorSpec()
        rng = np.random.default_rng(3)
        mat = prior.sample_matrix(rng, 6, 2000)
        envelopes = np.array([prior.envelope(j - i) for i, j in all_pairs(6)])
        np.testing.assert_allclose(mat.mean(axis=0), 0.5 * envelopes, atol=0.02)

    def test_crosstalk_requires_control(self):
        with pytest.raises(ValueError):
            PriorSpec(kind="crosstalk-control")


class TestErrorMetrics:
    def test_l2_zero_for_equal(self):
        x = CouplingVector.zeros(5)
        assert param_error_l2(x, x) == 0.0

    def test_l2_single_entry(self):
        x = CouplingVector.zeros(5)
        y = CouplingVector.from_pairs(5, {(1, 2): 3.0})
        assert param_error_l2(x, y) == pytest.approx(3.0)

    def test_l2_pythagoras(self):
        x = CouplingVector.zeros(5)
        y = CouplingVector.from_pairs(5, {(0, 1): 3.0, (2, 3): 4.0})
        assert param_error_l2(x, y) == pytest.approx(5.0)

    def test_l2_dimension_mismatch(self):
        with pytest.raises(ValueError):
            param_error_l2(CouplingVector.zeros(4), CouplingVector.zeros(5))


def _brute_force_op_norm(diff: np.ndarray, n: int) -> float:
    best = 0.0
    pairs = all_pairs(n)
    for z in range(1 << n):
        spins = [1 - 2 * ((z >> i) & 1) for i in range(n)]
        e = sum(diff[k] * spins[i] * spins[j] for k, (i, j) in enumerate(pairs))
        best = max(best, abs(e))
    return best


class TestOpNormDiag:
    def test_equal_vectors(self):
        x = CouplingVector.zeros(5)
        result = op_norm_diag(x, x)
        assert result.value == 0.0 and result.exact

    def test_single_coupling(self):
        x = CouplingVector.zeros(5)
        y = CouplingVector.from_pairs(5, {(1, 3): -0.7})
        assert op_norm_diag(x, y).value == pytest.approx(0.7)

    def test_matches_full_enumeration(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            x = CouplingVector(6, rng.normal(size=num_pairs(6)))
            y = CouplingVector(6, rng.normal(size=num_pairs(6)))
            expected = _brute_force_op_norm(x.values - y.values, 6)
            assert op_norm_diag(x, y).value == pytest.approx(expected, rel=1e-12)

    def test_l1_upper_bound_property(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = CouplingVector(7, rng.normal(size=num_pairs(7)))
            y = CouplingVector(7, rng.normal(size=num_pairs(7)))
            result = op_norm_diag(x, y)
            assert result.value <= np.abs(x.values - y.values).sum() + 1e-12

    def test_large_n_returns_flagged_l1(self):
        n = 26
        x = CouplingVector.zeros(n)
        values = np.zeros(num_pairs(n))
        values[:3] = [0.5, -0.25, 1.0]
        y = CouplingVector(n, values)
        result = op_norm_diag(x, y)
        assert not result.exact
        assert result.value == pytest.approx(1.75)
