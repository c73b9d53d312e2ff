"""Final prediction layer: NCM over projected features, or a pseudo-replay ELM.

The ELM never accumulates its Gram matrix across tasks. Because the
contrastive projection evolves as classes arrive, stale random-feature sums
would mix old and new geometries; instead the classifier is rebuilt after
every task from features sampled out of the per-class Gaussian model (class
means + shared covariance), pushed through the current projection stack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .analytic import RPMatrix, project, random_projection, ridge_solve
from .cp_layer import CPState, cp_transform
from .errors import NotFitted, UnknownClass
from .repulsion import TargetPrototypes
from .stats import DEFAULT_EPS_SCALE, ClassStats

CLASSIFIER_SEED_OFFSET = 10**6  # keeps the classifier RP stream clear of head seeds


@dataclass(frozen=True)
class ElmClassifier:
    """Ridge-solved readout over random projections of the adapted features."""

    rp: RPMatrix
    weights: np.ndarray  # (out_dim, n_seen_classes)
    lam: float
    classes: tuple[int, ...]


@dataclass(frozen=True)
class ReplaySampler:
    """Seeded Gaussian feature generator: x = mean_c + L z, z standard normal."""

    means: dict[int, np.ndarray]
    chol: np.ndarray
    samples_per_class: int
    seed: int


def make_replay_sampler(
    stats: ClassStats, samples_per_class: int, seed: int, eps_scale: float = DEFAULT_EPS_SCALE
) -> ReplaySampler:
    """Cholesky-factor the (shrunk) shared covariance for sampling."""
    eps = eps_scale * np.trace(stats.shared_cov) / stats.dim
    if eps <= 0:
        eps = 1e-12  # zero covariance still needs a factorizable matrix
    chol = np.linalg.cholesky(stats.shared_cov + eps * np.eye(stats.dim))
    return ReplaySampler(
        {c: m.copy() for c, m in stats.means.items()}, chol, samples_per_class, seed
    )


def sample_replay(sampler: ReplaySampler, classes) -> tuple[np.ndarray, np.ndarray]:
    """Draw `samples_per_class` features for each requested class, labels attached."""
    classes = sorted(int(c) for c in classes)
    missing = [c for c in classes if c not in sampler.means]
    if missing:
        raise UnknownClass(f"no stored mean for classes {missing}")
    dim = sampler.chol.shape[0]
    rng = np.random.default_rng(sampler.seed)
    n = sampler.samples_per_class
    blocks, labels = [], []
    for c in classes:
        z = rng.standard_normal((n, dim))
        blocks.append(sampler.means[c] + z @ sampler.chol.T)
        labels.append(np.full(n, c, dtype=np.int64))
    if not blocks or n == 0:
        return np.zeros((0, dim)), np.zeros(0, dtype=np.int64)
    return np.concatenate(blocks), np.concatenate(labels)


def one_hot(y: np.ndarray, classes) -> np.ndarray:
    """(n, len(classes)) one-hot targets; column order follows `classes`."""
    classes = list(classes)
    index = {c: k for k, c in enumerate(classes)}
    out = np.zeros((len(y), len(classes)))
    for row, label in enumerate(y):
        out[row, index[int(label)]] = 1.0
    return out


def rebuild_elm(
    cp: CPState,
    stats: ClassStats,
    samples_per_class: int,
    lam: float,
    seed: int,
    rp: RPMatrix | None = None,
) -> ElmClassifier:
    """Train the readout from scratch on replayed features for all seen classes.

    `seed` drives the replay draw; pass the same `rp` every task so only the
    readout weights change. When `rp` is omitted one is derived from the seed.
    """
    if not cp.fitted:
        raise NotFitted("projection layer must be fitted before building the classifier")
    classes = stats.classes
    if rp is None:
        rp = random_projection(cp.dim, cp.heads[0].out_dim, seed + CLASSIFIER_SEED_OFFSET)

    sampler = make_replay_sampler(stats, samples_per_class, seed, cp.eps_scale)
    X_gen, y_gen = sample_replay(sampler, classes)
    U = cp_transform(cp, X_gen)
    Z = project(rp, U)
    targets = one_hot(y_gen, classes)
    weights = ridge_solve(Z.T @ Z, Z.T @ targets, lam)
    return ElmClassifier(rp, weights, lam, tuple(classes))


def elm_scores(elm: ElmClassifier, U: np.ndarray) -> np.ndarray:
    """Class scores (n, n_seen); columns follow `elm.classes`."""
    if elm.weights is None:
        raise NotFitted("classifier has no weights")
    return project(elm.rp, U) @ elm.weights


def elm_classify(elm: ElmClassifier, U: np.ndarray) -> np.ndarray:
    """Argmax label per row; exact ties resolve to the lowest class index."""
    scores = elm_scores(elm, U)
    if scores.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    picks = np.argmax(scores, axis=1)  # first maximum = lowest class, classes are sorted
    return np.asarray(elm.classes, dtype=np.int64)[picks]


def ncm_distances(U: np.ndarray, prototypes: TargetPrototypes, metric: str = "euclidean") -> np.ndarray:
    """Distance of each row to each prototype; columns follow `prototypes.classes`."""
    U = np.asarray(U, dtype=np.float64)
    if metric == "euclidean":
        return cdist(U, prototypes.prototypes, metric="euclidean")
    if metric == "cosine":
        return cdist(U, prototypes.prototypes, metric="cosine")
    raise ValueError(f"unknown metric {metric!r}")


def ncm_classify(U: np.ndarray, prototypes: TargetPrototypes, metric: str = "euclidean") -> np.ndarray:
    """Nearest-prototype label per row; ties resolve to the lowest class index."""
    if prototypes.num_classes < 1:
        raise ValueError("need at least one prototype")
    dists = ncm_distances(U, prototypes, metric)
    if dists.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    picks = np.argmin(dists, axis=1)
    return np.asarray(prototypes.classes, dtype=np.int64)[picks]
