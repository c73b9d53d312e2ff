"""Feature files, task streams, and the synthetic generator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anacp import (
    FeatureDataset,
    SynthSpec,
    generate_synthetic,
    ground_truth,
    load_feature_file,
    make_task_stream,
    save_feature_file,
)
from anacp.errors import BadMagic, LabelOutOfRange, TooManyTasks, TruncatedFile

from helpers import accuracy_percent, bayes_predict

# Gaussian-discriminant oracle accuracy on the separated reference instance
# (dim=64, 20 classes, mean_scale=2, identity covariance, seed=0).
BAYES_ACC_SEPARATED = 100.0


def small_dataset():
    feats = np.arange(12, dtype=np.float32).reshape(3, 4)
    return FeatureDataset(feats, np.array([0, 2, 1]), num_classes=3)


class TestFeatureFile:
    def test_round_trip_identity(self, tmp_path):
        ds = small_dataset()
        path = save_feature_file(ds, tmp_path / "a.feat")
        loaded = load_feature_file(path)
        np.testing.assert_array_equal(loaded.features, ds.features)
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        assert loaded.num_classes == 3

    def test_round_trip_bytes_identical(self, tmp_path):
        ds = small_dataset()
        first = save_feature_file(ds, tmp_path / "a.feat")
        second = save_feature_file(load_feature_file(first), tmp_path / "b.feat")
        assert first.read_bytes() == second.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = save_feature_file(small_dataset(), tmp_path / "a.feat")
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(raw)
        with pytest.raises(BadMagic):
            load_feature_file(path)

    def test_truncated_payload(self, tmp_path):
        path = save_feature_file(small_dataset(), tmp_path / "a.feat")
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 8])
        with pytest.raises(TruncatedFile):
            load_feature_file(path)

    def test_label_out_of_range(self, tmp_path):
        # header says 3 classes; rewrite one stored label to 7
        path = save_feature_file(small_dataset(), tmp_path / "a.feat")
        raw = bytearray(path.read_bytes())
        raw[-4:] = (7).to_bytes(4, "little")
        path.write_bytes(raw)
        with pytest.raises(LabelOutOfRange):
            load_feature_file(path)

    def test_manifest_class_names_round_trip(self, tmp_path):
        ds = FeatureDataset(
            np.ones((2, 2), dtype=np.float32), np.array([0, 1]), 2, class_names=["cat", "dog"]
        )
        loaded = load_feature_file(save_feature_file(ds, tmp_path / "named.feat"))
        assert loaded.class_names == ["cat", "dog"]


class TestTaskStream:
    def _data(self, n_classes=10, per_class=6, dim=5, seed=0):
        rng = np.random.default_rng(seed)
        feats = rng.standard_normal((n_classes * per_class, dim)).astype(np.float32)
        labels = np.repeat(np.arange(n_classes), per_class)
        return FeatureDataset(feats, labels, n_classes)

    def test_even_split_counts(self):
        train = self._data(n_classes=100, per_class=2)
        stream = make_task_stream(train, train, num_tasks=10, seed=0)
        assert len(stream) == 10
        assert all(len(task.classes) == 10 for task in stream.tasks)

    def test_single_task_holds_everything(self):
        train = self._data()
        stream = make_task_stream(train, train, num_tasks=1, seed=3)
        assert stream.tasks[0].classes == tuple(range(10))
        assert stream.tasks[0].train.n == train.n

    def test_remainder_classes_go_to_last_task(self):
        train = self._data(n_classes=7)
        stream = make_task_stream(train, train, num_tasks=3, seed=0)
        assert [len(t.classes) for t in stream.tasks] == [2, 2, 3]

    def test_seed_reproducibility(self):
        train = self._data()
        a = make_task_stream(train, train, 5, seed=42)
        b = make_task_stream(train, train, 5, seed=42)
        assert [t.classes for t in a.tasks] == [t.classes for t in b.tasks]

    def test_too_many_tasks(self):
        train = self._data(n_classes=4)
        with pytest.raises(TooManyTasks):
            make_task_stream(train, train, num_tasks=5, seed=0)

    @given(seed=st.integers(0, 10_000), num_tasks=st.integers(1, 10))
    @settings(max_examples=25, deadline=None)
    def test_partition_is_disjoint_and_complete(self, seed, num_tasks):
        train = self._data()
        stream = make_task_stream(train, train, num_tasks, seed)
        all_classes = [c for task in stream.tasks for c in task.classes]
        assert sorted(all_classes) == list(range(10))
        assert len(set(all_classes)) == len(all_classes)
        # every sample lands in the task owning its label
        total = sum(task.train.n for task in stream.tasks)
        assert total == train.n
        for task in stream.tasks:
            assert set(np.unique(task.train.labels)) <= set(task.classes)


class TestSyntheticGenerator:
    def test_zero_mean_scale_is_chance_level(self):
        spec = SynthSpec(dim=8, num_classes=4, n_per_class=200, mean_scale=0.0, seed=1)
        train, test = generate_synthetic(spec)
        means, cov = ground_truth(spec)
        assert np.allclose(means, 0.0)
        acc = accuracy_percent(bayes_predict(test.features, means, cov), test.labels)
        # identical class distributions: nothing beats guessing
        assert abs(acc - 100.0 / 4) < 12.0

    def test_separated_limit_bayes_and_ncm(self):
        spec = SynthSpec(dim=16, num_classes=5, n_per_class=100, mean_scale=10.0, seed=2)
        train, test = generate_synthetic(spec)
        means, cov = ground_truth(spec)
        assert accuracy_percent(bayes_predict(test.features, means, cov), test.labels) == 100.0
        # raw nearest-class-mean on the empirical means is just as clean here
        emp = np.stack([train.features[train.labels == c].mean(0) for c in range(5)])
        dists = ((test.features[:, None, :].astype(np.float64) - emp[None]) ** 2).sum(-1)
        assert accuracy_percent(np.argmin(dists, 1), test.labels) >= 99.9

    def test_reference_instance_bayes_accuracy_fixture(self):
        spec = SynthSpec(dim=64, num_classes=20, n_per_class=100, mean_scale=2.0, seed=0)
        _, test = generate_synthetic(spec)
        means, cov = ground_truth(spec)
        acc = accuracy_percent(bayes_predict(test.features, means, cov), test.labels)
        assert acc == pytest.approx(BAYES_ACC_SEPARATED, abs=1e-9)

    def test_empirical_means_converge(self):
        spec = SynthSpec(dim=4, num_classes=2, n_per_class=50_000, mean_scale=1.0, seed=5)
        train, _ = generate_synthetic(spec)
        means, _ = ground_truth(spec)
        for c in range(2):
            rows = train.features[train.labels == c].astype(np.float64)
            err = np.abs(rows.mean(axis=0) - means[c])
            assert np.all(err < 3.0 / np.sqrt(rows.shape[0]) * 3)  # 3 sigma, sigma = 1

    def test_random_spd_covariance_condition_bound(self):
        spec = SynthSpec(
            dim=12, num_classes=3, n_per_class=10, covariance="random",
            condition_number=50.0, seed=7,
        )
        _, cov = ground_truth(spec)
        eigs = np.linalg.eigvalsh(cov)
        assert eigs.min() > 0
        assert eigs.max() / eigs.min() <= 50.0 * (1 + 1e-9)

    def test_generator_determinism(self):
        spec = SynthSpec(dim=6, num_classes=3, n_per_class=10, seed=9)
        a_train, a_test = generate_synthetic(spec)
        b_train, b_test = generate_synthetic(spec)
        np.testing.assert_array_equal(a_train.features, b_train.features)
        np.testing.assert_array_equal(a_test.features, b_test.features)

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(dim=1, num_classes=4, n_per_class=10)
        with pytest.raises(ValueError):
            SynthSpec(dim=4, num_classes=1, n_per_class=10)
        with pytest.raises(ValueError):
            SynthSpec(dim=4, num_classes=4, n_per_class=10, condition_number=0.5)
