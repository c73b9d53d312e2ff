"""Independent oracles used to derive expected values.

Each oracle takes a different computational route than the library code it
checks: dense normal equations and an iterative minimizer for ridge solves,
one-shot pooled statistics for incremental updates, central finite differences
for derivative signs, and the closed-form Gaussian discriminant for synthetic
benchmark accuracy.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.optimize


def ridge_normal_equations(X, Y, lam):
    """Direct dense solve of (X^T X + lam I) W = X^T Y."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return np.linalg.solve(X.T @ X + lam * np.eye(X.shape[1]), X.T @ Y)


def ridge_iterative(X, Y, lam, tol=1e-12):
    """L-BFGS minimization of ||XW - Y||^2 + lam ||W||^2 from a zero start."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    shape = (X.shape[1], Y.shape[1])

    def objective(flat):
        W = flat.reshape(shape)
        resid = X @ W - Y
        value = np.sum(resid**2) + lam * np.sum(W**2)
        grad = 2.0 * X.T @ resid + 2.0 * lam * W
        return value, grad.ravel()

    result = scipy.optimize.minimize(
        objective, np.zeros(shape).ravel(), jac=True, method="L-BFGS-B",
        options={"gtol": tol, "ftol": 0.0, "maxiter": 20000},
    )
    return result.x.reshape(shape)


def ridge_gradient_norm(X, Y, lam, W):
    """Norm of the regularized least-squares gradient at W."""
    return np.linalg.norm(2.0 * X.T @ (X @ W - Y) + 2.0 * lam * W)


def pooled_within_class_covariance(X, y):
    """One-shot population covariance of deviations from global class means."""
    X = np.asarray(X, dtype=np.float64)
    cov = np.zeros((X.shape[1], X.shape[1]))
    for c in np.unique(y):
        rows = X[y == c]
        centered = rows - rows.mean(axis=0)
        cov += centered.T @ centered
    return cov / X.shape[0]


def abs_cosine_pair_sum(columns):
    """Sum over ordered pairs of |cos|, written with explicit loops."""
    cols = [np.asarray(columns[:, i], dtype=np.float64) for i in range(columns.shape[1])]
    total = 0.0
    for i, wi in enumerate(cols):
        for j, wj in enumerate(cols):
            if i == j:
                continue
            total += abs(wi @ wj) / (np.linalg.norm(wi) * np.linalg.norm(wj))
    return total


def fd_shift_derivative(W, E, i, h=1e-6):
    """Central-difference derivative at 0 of column i's |cosine| sum under a
    unit shift along E[:, i] (the other columns stay fixed)."""

    def f(alpha):
        shifted = W[:, i] + alpha * E[:, i]
        total = 0.0
        for j in range(W.shape[1]):
            if j == i:
                continue
            wj = W[:, j]
            total += abs(wj @ shifted) / (np.linalg.norm(wj) * np.linalg.norm(shifted))
        return total

    return (f(h) - f(-h)) / (2.0 * h)


def bayes_predict(X, means, cov):
    """Shared-covariance Gaussian discriminant: nearest mean in Mahalanobis distance."""
    X = np.asarray(X, dtype=np.float64)
    prec = np.linalg.inv(cov)
    scores = np.zeros((X.shape[0], means.shape[0]))
    for c in range(means.shape[0]):
        diff = X - means[c]
        scores[:, c] = -np.einsum("ij,jk,ik->i", diff, prec, diff)
    return np.argmax(scores, axis=1)


def gelu_reference(x: float) -> float:
    """Scalar GELU via the stdlib erf."""
    return x * 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def accuracy_percent(pred, truth) -> float:
    return 100.0 * float(np.mean(np.asarray(pred) == np.asarray(truth)))


def clustered_pairs_data(
    seed, dim=24, n_pairs=8, per_class=100, radius=4.0, angle=0.25,
    condition=6.0, noise_scale=0.85,
):
    """Benchmark with classes in nearly-collinear pairs under anisotropic noise.

    Each pair shares a direction; the two means sit at the same radius a small
    angle apart, so their whitened cosine similarity is high. Returns
    (train, test) FeatureDatasets.
    """
    from anacp import FeatureDataset

    rng = np.random.default_rng(seed)
    means = []
    for _ in range(n_pairs):
        u = rng.standard_normal(dim)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(dim)
        v -= (v @ u) * u
        v /= np.linalg.norm(v)
        means.append(radius * u)
        means.append(radius * (np.cos(angle) * u + np.sin(angle) * v))
    means = np.stack(means)
    n_classes = len(means)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = np.exp(rng.uniform(np.log(1.0 / condition), 0.0, dim))
    chol = (q * np.sqrt(eigs)) * noise_scale

    def draw(n):
        X = np.vstack([means[c] + rng.standard_normal((n, dim)) @ chol.T for c in range(n_classes)])
        return FeatureDataset(X.astype(np.float32), np.repeat(np.arange(n_classes), n), n_classes)

    return draw(per_class), draw(per_class)
