"""Feature-file format, task-stream model, and a synthetic Gaussian benchmark generator.

Feature vectors are the only currency of the library: learners never see
images. On disk a dataset is a binary ``.feat`` file (header + float32 rows +
uint32 labels) with an optional JSON sidecar manifest carrying class names and
provenance. Features are float32 on disk and in memory; learners widen to
float64 before any linear algebra.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagic, LabelOutOfRange, TooManyTasks, TruncatedFile

MAGIC = b"FEAT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBIII")  # magic, version, N, d, C


@dataclass(frozen=True)
class FeatureDataset:
    """Labeled feature vectors: an (N, d) float32 matrix plus integer labels.

    Immutable after construction; safe to share across threads.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    class_names: list[str] | None = None

    def __post_init__(self):
        # private copies: the dataset freezes its arrays, never the caller's
        feats = np.array(self.features, dtype=np.float32, order="C")
        labels = np.array(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        if feats.ndim != 2 or feats.shape[0] == 0 or feats.shape[1] == 0:
            raise ValueError(f"features must be a non-empty 2-D matrix, got shape {feats.shape}")
        if labels.shape != (feats.shape[0],):
            raise ValueError(
                f"labels length {labels.shape} does not match {feats.shape[0]} feature rows"
            )
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise LabelOutOfRange(
                f"labels must lie in [0, {self.num_classes}), got range "
                f"[{labels.min()}, {labels.max()}]"
            )
        if self.class_names is not None and len(self.class_names) != self.num_classes:
            raise ValueError("class_names length must equal num_classes")
        feats.setflags(write=False)
        labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def restrict_to(self, classes) -> "FeatureDataset":
        """Rows whose label is in `classes`, preserving order and class ids."""
        mask = np.isin(self.labels, np.asarray(sorted(classes)))
        return FeatureDataset(
            self.features[mask], self.labels[mask], self.num_classes, self.class_names
        )


@dataclass(frozen=True)
class TaskSplit:
    """One task of a stream: its class set and the matching train/test rows."""

    classes: tuple[int, ...]
    train: FeatureDataset
    test: FeatureDataset


@dataclass(frozen=True)
class TaskStream:
    """Ordered disjoint tasks covering every class exactly once."""

    tasks: tuple[TaskSplit, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def all_classes(self) -> tuple[int, ...]:
        out: list[int] = []
        for task in self.tasks:
            out.extend(task.classes)
        return tuple(sorted(out))


def save_feature_file(dataset: FeatureDataset, path, manifest: dict | None = None) -> Path:
    """Write `dataset` to `path` plus a JSON sidecar manifest at `path + '.json'`.

    The binary layout is: magic ``FEAT``, version u8, then u32 N, u32 d,
    u32 C, N*d little-endian float32 features row-major, N u32 labels.
    """
    path = Path(path)
    payload = bytearray()
    payload += _HEADER.pack(MAGIC, FORMAT_VERSION, dataset.n, dataset.dim, dataset.num_classes)
    payload += dataset.features.astype("<f4", copy=False).tobytes(order="C")
    payload += dataset.labels.astype("<u4").tobytes()
    path.write_bytes(payload)

    meta = dict(manifest or {})
    meta.setdefault("class_names", dataset.class_names)
    meta.setdefault("source_model", None)
    meta.setdefault("dataset_name", None)
    meta["extraction_checksum"] = hashlib.sha256(bytes(payload)).hexdigest()
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path


def load_feature_file(path) -> FeatureDataset:
    """Read a feature file written by `save_feature_file`.

    Raises BadMagic, TruncatedFile, or LabelOutOfRange on malformed input.
    The sidecar manifest is optional; class names are taken from it if present.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size or raw[:4] != MAGIC:
        raise BadMagic(f"{path} is not a feature file (missing {MAGIC!r} header)")
    magic, version, n, d, c = _HEADER.unpack_from(raw)
    if version != FORMAT_VERSION:
        raise BadMagic(f"{path}: unsupported format version {version}")
    feat_bytes = n * d * 4
    label_bytes = n * 4
    expected = _HEADER.size + feat_bytes + label_bytes
    if len(raw) < expected:
        raise TruncatedFile(f"{path}: expected {expected} bytes, file has {len(raw)}")
    feats = np.frombuffer(raw, dtype="<f4", count=n * d, offset=_HEADER.size).reshape(n, d)
    labels = np.frombuffer(raw, dtype="<u4", count=n, offset=_HEADER.size + feat_bytes)
    if labels.size and labels.max() >= c:
        raise LabelOutOfRange(f"{path}: label {labels.max()} >= declared class count {c}")

    class_names = None
    sidecar = Path(str(path) + ".json")
    if sidecar.exists():
        class_names = json.loads(sidecar.read_text()).get("class_names")
    return FeatureDataset(feats.copy(), labels.astype(np.int64), int(c), class_names)


def make_task_stream(
    train: FeatureDataset, test: FeatureDataset, num_tasks: int, seed: int
) -> TaskStream:
    """Shuffle classes with a seeded PRNG and partition them into contiguous groups.

    When the class count is not divisible by `num_tasks`, the remainder classes
    are appended to the final task. Sample-to-task assignment follows labels.
    """
    if train.num_classes != test.num_classes:
        raise ValueError("train and test must declare the same class count")
    n_classes = train.num_classes
    if num_tasks < 1:
        raise ValueError("num_tasks must be >= 1")
    if num_tasks > n_classes:
        raise TooManyTasks(f"cannot split {n_classes} classes into {num_tasks} tasks")

    order = np.random.default_rng(seed).permutation(n_classes)
    base = n_classes // num_tasks
    tasks = []
    for t in range(num_tasks):
        start = t * base
        stop = (t + 1) * base if t < num_tasks - 1 else n_classes
        classes = tuple(sorted(int(c) for c in order[start:stop]))
        tasks.append(
            TaskSplit(classes, train.restrict_to(classes), test.restrict_to(classes))
        )
    return TaskStream(tuple(tasks), seed)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic Gaussian-mixture benchmark.

    Class means are drawn as `mean_scale` * standard normal; all classes share
    one covariance (identity, or a random SPD matrix Q diag(lambda) Q^T with
    seeded orthogonal Q and log-uniform eigenvalues of condition number at
    most `condition_number`).
    """

    dim: int
    num_classes: int
    n_per_class: int
    mean_scale: float = 1.0
    covariance: str = "identity"
    condition_number: float = 10.0
    seed: int = 0
    n_test_per_class: int | None = None

    def __post_init__(self):
        if self.dim < 2 or self.num_classes < 2 or self.n_per_class < 1:
            raise ValueError("need dim >= 2, num_classes >= 2, n_per_class >= 1")
        if self.covariance not in ("identity", "random"):
            raise ValueError(f"unknown covariance kind {self.covariance!r}")
        if self.condition_number < 1:
            raise ValueError("condition_number must be >= 1")

    @property
    def test_count(self) -> int:
        return self.n_test_per_class if self.n_test_per_class is not None else self.n_per_class


def ground_truth(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """True (means, covariance) of the mixture, re-derivable from the spec alone."""
    rng = np.random.default_rng(spec.seed)
    means = spec.mean_scale * rng.standard_normal((spec.num_classes, spec.dim))
    if spec.covariance == "identity":
        cov = np.eye(spec.dim)
    else:
        q, r = np.linalg.qr(rng.standard_normal((spec.dim, spec.dim)))
        q *= np.sign(np.diag(r))  # fix the QR sign ambiguity
        log_lo, log_hi = -np.log(spec.condition_number), 0.0
        eigs = np.exp(rng.uniform(log_lo, log_hi, size=spec.dim))
        cov = (q * eigs) @ q.T
        cov = 0.5 * (cov + cov.T)
    return means, cov


def generate_synthetic(spec: SynthSpec) -> tuple[FeatureDataset, FeatureDataset]:
    """Draw (train, test) datasets from the mixture described by `spec`."""
    means, cov = ground_truth(spec)
    rng = np.random.default_rng(spec.seed + 1)  # separate stream from the ground truth
    if spec.covariance == "identity":
        chol = None
    else:
        chol = np.linalg.cholesky(cov)

    def draw(n_per_class: int) -> FeatureDataset:
        blocks, labels = [], []
        for c in range(spec.num_classes):
            z = rng.standard_normal((n_per_class, spec.dim))
            noise = z if chol is None else z @ chol.T
            blocks.append(means[c] + noise)
            labels.append(np.full(n_per_class, c))
        return FeatureDataset(
            np.concatenate(blocks).astype(np.float32),
            np.concatenate(labels),
            spec.num_classes,
        )

    return draw(spec.n_per_class), draw(spec.test_count)
