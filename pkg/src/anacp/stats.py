"""Incremental per-class means, counts, and the shared covariance, plus whitening.

The covariance update folds each incoming batch's within-class scatter into a
running population covariance:

    cov_t = (N_{t-1}/N_t) * cov_{t-1}
            + (1/N_t) * sum_c sum_{i in c} (x_i - mu_c)(x_i - mu_c)^T

with mu_c the mean of class c inside the incoming batch. Under disjoint-class
streams this matches the one-shot pooled computation exactly; when a class
recurs, its stored mean becomes the running weighted mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EigDecompositionFailure

DEFAULT_EPS_SCALE = 1e-4
_EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class ClassStats:
    """Immutable snapshot of class means, counts, and the shared covariance.

    Means exist only for seen classes; `classes` lists them in ascending order.
    """

    dim: int
    means: dict[int, np.ndarray] = field(default_factory=dict)
    counts: dict[int, int] = field(default_factory=dict)
    shared_cov: np.ndarray | None = None
    total_count: int = 0

    def __post_init__(self):
        if self.shared_cov is None:
            object.__setattr__(self, "shared_cov", np.zeros((self.dim, self.dim)))

    @property
    def classes(self) -> list[int]:
        return sorted(self.means)

    def mean_matrix(self) -> np.ndarray:
        """Class means as columns (dim x n_seen), ordered by class index."""
        return np.column_stack([self.means[c] for c in self.classes])

    def count_vector(self) -> np.ndarray:
        return np.array([self.counts[c] for c in self.classes], dtype=np.int64)


def empty_stats(dim: int) -> ClassStats:
    return ClassStats(dim=dim)


def update_stats(stats: ClassStats, X: np.ndarray, y: np.ndarray) -> ClassStats:
    """Fold one batch of labeled features into the statistics.

    Returns a new snapshot; the input is untouched. Means and counts update as
    running weighted sums, so task order never matters.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] != stats.dim:
        raise DimensionMismatch(f"expected (n, {stats.dim}) features, got {X.shape}")
    if y.shape != (X.shape[0],):
        raise DimensionMismatch("labels must be one per feature row")

    means = {c: m.copy() for c, m in stats.means.items()}
    counts = dict(stats.counts)
    scatter = np.zeros((stats.dim, stats.dim))
    for c in np.unique(y):
        rows = X[y == c]
        mu_batch = rows.mean(axis=0)
        centered = rows - mu_batch
        scatter += centered.T @ centered
        c = int(c)
        prev = counts.get(c, 0)
        if prev:
            means[c] = (prev * means[c] + rows.shape[0] * mu_batch) / (prev + rows.shape[0])
        else:
            means[c] = mu_batch
        counts[c] = prev + rows.shape[0]

    new_total = stats.total_count + X.shape[0]
    cov = (stats.total_count / new_total) * stats.shared_cov + scatter / new_total
    cov = 0.5 * (cov + cov.T)
    return ClassStats(stats.dim, means, counts, cov, new_total)


@dataclass(frozen=True)
class WhitenTransform:
    """Symmetric square-root pair: `forward` scales to unit variance, `backward` undoes it."""

    forward: np.ndarray
    backward: np.ndarray
    eps: float

    def whiten(self, vectors: np.ndarray) -> np.ndarray:
        return vectors @ self.forward.T

    def dewhiten(self, vectors: np.ndarray) -> np.ndarray:
        return vectors @ self.backward.T


def make_whitener(stats: ClassStats, eps_scale: float = DEFAULT_EPS_SCALE) -> WhitenTransform:
    """Build inverse/forward matrix square roots of the shared covariance.

    The covariance is shrunk by eps = eps_scale * trace(cov)/dim before the
    eigendecomposition so that singular covariances (fewer samples than
    dimensions, collinear features) still whiten stably. Eigenvalues are
    clamped below at 1e-12.
    """
    if stats.total_count <= 0:
        raise ValueError("cannot whiten before any data is seen")
    cov = stats.shared_cov
    eps = eps_scale * np.trace(cov) / stats.dim
    regularized = cov + eps * np.eye(stats.dim)
    try:
        eigvals, eigvecs = np.linalg.eigh(regularized)
    except np.linalg.LinAlgError as exc:
        raise EigDecompositionFailure(str(exc)) from exc
    eigvals = np.maximum(eigvals, _EIG_FLOOR)
    forward = (eigvecs * eigvals**-0.5) @ eigvecs.T
    backward = (eigvecs * eigvals**0.5) @ eigvecs.T
    return WhitenTransform(0.5 * (forward + forward.T), 0.5 * (backward + backward.T), float(eps))
