"""Closed-form building blocks: ridge solves, Gram/cross accumulation, random projection.

Everything here is shared machinery. A ridge solution is always recomputed
from the accumulated Gram and cross matrices (never via rank-one weight
updates), so learners trained task-by-task coincide exactly with a joint
solve over the pooled data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import ndtr

from .errors import DimensionMismatch, ShrinkingTargets, SingularSystem

# Recorded in checkpoints so stored seeds stay meaningful across releases.
PRNG_NAME = "numpy.random.Generator(PCG64)"
PRNG_VERSION = np.__version__

_RANK_TOL = 1e-10


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact GELU, x * Phi(x) with Phi the standard normal CDF (erf form)."""
    x = np.asarray(x, dtype=np.float64)
    return x * ndtr(x)


def ridge_solve(G: np.ndarray, H: np.ndarray, lam: float) -> np.ndarray:
    """Solve (G + lam*I) W = H for W via a symmetric positive-definite solve.

    Uses a Cholesky factorization, falling back to a symmetric
    eigendecomposition when the factorization fails on near-PSD numerical
    noise. No explicit inverse is ever formed.

    Raises SingularSystem when the regularized system is rank-deficient
    (lam == 0 with a singular Gram matrix).
    """
    G = np.asarray(G, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionMismatch(f"Gram matrix must be square, got {G.shape}")
    if H.ndim != 2 or H.shape[0] != G.shape[0]:
        raise DimensionMismatch(f"cross matrix rows must match Gram size, got {H.shape}")
    if lam < 0:
        raise ValueError("ridge strength must be >= 0")

    A = G + lam * np.eye(G.shape[0])
    A = 0.5 * (A + A.T)
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(A, lower=True), H)
    except scipy.linalg.LinAlgError:
        pass
    eigvals, eigvecs = np.linalg.eigh(A)
    cutoff = _RANK_TOL * max(abs(eigvals[0]), abs(eigvals[-1]), 1e-300)
    if eigvals[0] <= cutoff:
        raise SingularSystem(
            f"system is rank-deficient (min eigenvalue {eigvals[0]:.3e}); "
            "use lam > 0 or a full-rank Gram matrix"
        )
    return (eigvecs / eigvals) @ (eigvecs.T @ H)


@dataclass(frozen=True)
class GramAccumulator:
    """Running Gram (D x D) and cross (D x K) sums with class-growth padding.

    The cross matrix only ever widens: new target columns are appended as
    zeros and existing columns are never rewritten, so targets introduced by
    later tasks cannot disturb earlier ones.
    """

    gram: np.ndarray
    cross: np.ndarray
    lam: float

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    @property
    def width(self) -> int:
        return self.cross.shape[1]

    def solve(self) -> np.ndarray:
        return ridge_solve(self.gram, self.cross, self.lam)


def empty_accumulator(dim: int, lam: float, width: int = 0) -> GramAccumulator:
    return GramAccumulator(np.zeros((dim, dim)), np.zeros((dim, width)), lam)


def accumulate(acc: GramAccumulator, Z: np.ndarray, T: np.ndarray) -> GramAccumulator:
    """Add one batch: gram += Z^T Z and cross (zero-padded to T's width) += Z^T T."""
    Z = np.asarray(Z, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != acc.dim:
        raise DimensionMismatch(f"expected (n, {acc.dim}) features, got {Z.shape}")
    if T.ndim != 2 or T.shape[0] != Z.shape[0]:
        raise DimensionMismatch("targets must have one row per feature row")
    if T.shape[1] < acc.width:
        raise ShrinkingTargets(f"target width {T.shape[1]} < accumulated width {acc.width}")

    cross = np.zeros((acc.dim, T.shape[1]))
    cross[:, : acc.width] = acc.cross
    cross += Z.T @ T
    return GramAccumulator(acc.gram + Z.T @ Z, cross, acc.lam)


@dataclass(frozen=True)
class RPMatrix:
    """Fixed random projection weights (dim x out_dim), reproducible from the seed."""

    weights: np.ndarray
    seed: int

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[1]


def random_projection(dim: int, out_dim: int, seed: int) -> RPMatrix:
    """Draw an i.i.d. standard-normal (dim x out_dim) projection matrix."""
    if dim < 1 or out_dim < 1:
        raise ValueError("projection dimensions must be >= 1")
    weights = np.random.default_rng(seed).standard_normal((dim, out_dim))
    return RPMatrix(weights, seed)


def project(rp: RPMatrix, X: np.ndarray) -> np.ndarray:
    """Nonlinear random features GELU(X @ R); pure per row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != rp.dim:
        raise DimensionMismatch(f"expected (n, {rp.dim}) inputs, got {X.shape}")
    return gelu(X @ rp.weights)
