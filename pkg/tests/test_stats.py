"""Incremental statistics and whitening."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anacp import ClassStats, empty_stats, make_whitener, update_stats
from anacp.errors import DimensionMismatch

from helpers import pooled_within_class_covariance


def random_task(rng, classes, per_class, dim):
    X = rng.standard_normal((len(classes) * per_class, dim)) + rng.uniform(-2, 2, dim)
    y = np.repeat(classes, per_class)
    return X, y


class TestUpdateStats:
    def test_single_batch_matches_batch_scatter(self):
        rng = np.random.default_rng(0)
        X, y = random_task(rng, [0, 1, 2], 20, 6)
        stats = update_stats(empty_stats(6), X, y)
        np.testing.assert_allclose(
            stats.shared_cov, pooled_within_class_covariance(X, y), rtol=1e-12, atol=1e-12
        )
        assert stats.total_count == 60
        assert stats.classes == [0, 1, 2]

    def test_sequential_equals_concatenated(self):
        rng = np.random.default_rng(1)
        X1, y1 = random_task(rng, [0, 1], 15, 5)
        X2, y2 = random_task(rng, [2, 3, 4], 10, 5)
        seq = update_stats(update_stats(empty_stats(5), X1, y1), X2, y2)
        pooled = update_stats(empty_stats(5), np.vstack([X1, X2]), np.concatenate([y1, y2]))
        np.testing.assert_allclose(seq.shared_cov, pooled.shared_cov, rtol=1e-10)
        for c in seq.classes:
            np.testing.assert_allclose(seq.means[c], pooled.means[c], rtol=1e-12)

    def test_one_sample_per_class_gives_zero_covariance(self):
        X = np.array([[1.0, 2.0], [3.0, -1.0], [0.0, 0.5]])
        stats = update_stats(empty_stats(2), X, np.array([0, 1, 2]))
        np.testing.assert_array_equal(stats.shared_cov, np.zeros((2, 2)))

    def test_unseen_classes_absent_not_zero(self):
        stats = update_stats(empty_stats(3), np.ones((2, 3)), np.array([5, 5]))
        assert stats.classes == [5]
        assert 0 not in stats.means

    def test_recurring_class_mean_is_weighted_average(self):
        stats = update_stats(empty_stats(1), np.array([[0.0], [2.0]]), np.array([0, 0]))
        stats = update_stats(stats, np.array([[10.0]]), np.array([0]))
        assert stats.means[0][0] == pytest.approx((0 + 2 + 10) / 3)
        assert stats.counts[0] == 3

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            update_stats(empty_stats(4), np.ones((2, 3)), np.array([0, 1]))
        with pytest.raises(DimensionMismatch):
            update_stats(empty_stats(3), np.ones((2, 3)), np.array([0]))

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_task_order_invariance(self, seed):
        rng = np.random.default_rng(seed)
        tasks = [random_task(rng, [3 * t, 3 * t + 1, 3 * t + 2], 8, 4) for t in range(4)]
        forward = empty_stats(4)
        for X, y in tasks:
            forward = update_stats(forward, X, y)
        backward = empty_stats(4)
        for X, y in reversed(tasks):
            backward = update_stats(backward, X, y)
        np.testing.assert_allclose(forward.shared_cov, backward.shared_cov, rtol=1e-9, atol=1e-12)
        assert forward.counts == backward.counts
        for c in forward.classes:
            np.testing.assert_allclose(forward.means[c], backward.means[c], rtol=1e-9)

    def test_incremental_matches_oneshot_oracle_over_stream(self):
        rng = np.random.default_rng(7)
        stats = empty_stats(5)
        all_X, all_y = [], []
        for t in range(5):
            X, y = random_task(rng, [2 * t, 2 * t + 1], 12, 5)
            stats = update_stats(stats, X, y)
            all_X.append(X)
            all_y.append(y)
        pooled_cov = pooled_within_class_covariance(np.vstack(all_X), np.concatenate(all_y))
        np.testing.assert_allclose(stats.shared_cov, pooled_cov, rtol=1e-9)

    def test_input_snapshot_not_mutated(self):
        rng = np.random.default_rng(3)
        X, y = random_task(rng, [0, 1], 5, 3)
        first = update_stats(empty_stats(3), X, y)
        cov_copy = first.shared_cov.copy()
        update_stats(first, *random_task(rng, [2], 5, 3))
        np.testing.assert_array_equal(first.shared_cov, cov_copy)


class TestWhitener:
    def test_identity_covariance(self):
        stats = update_stats(empty_stats(2), np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]) * np.sqrt(2), np.zeros(4, int))
        # covariance is the identity by construction
        np.testing.assert_allclose(stats.shared_cov, np.eye(2), atol=1e-12)
        wt = make_whitener(stats, eps_scale=0.0)
        np.testing.assert_allclose(wt.forward, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(wt.backward, np.eye(2), atol=1e-12)

    def test_diagonal_closed_form(self):
        stats = ClassStats(dim=2, shared_cov=np.diag([4.0, 1.0]), total_count=10)
        wt = make_whitener(stats, eps_scale=0.0)
        np.testing.assert_allclose(wt.forward, np.diag([0.5, 1.0]), atol=1e-12)
        np.testing.assert_allclose(wt.backward, np.diag([2.0, 1.0]), atol=1e-12)

    def test_whitened_sample_has_identity_covariance(self):
        rng = np.random.default_rng(11)
        A = rng.standard_normal((6, 6))
        cov = A @ A.T + 0.5 * np.eye(6)
        X = rng.multivariate_normal(np.zeros(6), cov, size=60_000)
        stats = update_stats(empty_stats(6), X, np.zeros(len(X), int))
        wt = make_whitener(stats, eps_scale=0.0)
        W = wt.whiten(X - X.mean(0))
        emp = W.T @ W / len(W)
        np.testing.assert_allclose(emp, np.eye(6), atol=0.05)

    def test_round_trip(self):
        rng = np.random.default_rng(13)
        X = rng.standard_normal((200, 8)) @ rng.standard_normal((8, 8))
        stats = update_stats(empty_stats(8), X, np.zeros(200, int))
        wt = make_whitener(stats)
        v = rng.standard_normal((5, 8))
        np.testing.assert_allclose(wt.dewhiten(wt.whiten(v)), v, rtol=1e-6)
        np.testing.assert_allclose(wt.forward @ wt.backward, np.eye(8), atol=1e-8)

    def test_symmetric_outputs(self):
        rng = np.random.default_rng(17)
        X = rng.standard_normal((50, 4))
        stats = update_stats(empty_stats(4), X, np.zeros(50, int))
        wt = make_whitener(stats)
        np.testing.assert_allclose(wt.forward, wt.forward.T, atol=1e-12)
        np.testing.assert_allclose(wt.backward, wt.backward.T, atol=1e-12)

    def test_requires_data(self):
        with pytest.raises(ValueError):
            make_whitener(empty_stats(3))

    def test_singular_covariance_survives_via_shrinkage(self):
        # rank-1 covariance; unshrunk square root would blow up
        X = np.outer(np.arange(20.0), np.array([1.0, 2.0, 3.0]))
        stats = update_stats(empty_stats(3), X, np.zeros(20, int))
        wt = make_whitener(stats)  # default eps_scale
        assert np.all(np.isfinite(wt.forward))
        np.testing.assert_allclose(wt.forward @ wt.backward, np.eye(3), atol=1e-6)
