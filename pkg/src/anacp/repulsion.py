"""Target-prototype separation by singular-value perturbation of whitened class means.

Class means that lie at small angles to each other (after whitening by the
shared covariance) make poor regression targets. This module nudges the
singular values of the whitened mean matrix in directions chosen so that the
sum of pairwise absolute cosine similarities among the means decreases, then
de-whitens the result back to input-feature scale. The sign of each nudge is
the negated sign of the derivative of that column's cosine-similarity sum
under an orthogonal shift, evaluated at zero shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonOrthonormalBasis, TooFewClasses, ZeroVector
from .stats import ClassStats, WhitenTransform

_ORTHO_TOL = 1e-8
_ZERO_DERIVATIVE_TOL = 1e-10


def _as_columns(vectors) -> np.ndarray:
    if isinstance(vectors, (list, tuple)):
        return np.column_stack([np.asarray(v, dtype=np.float64) for v in vectors])
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def cosine_sum(vectors) -> float:
    """Sum over ordered pairs (i, j != i) of |cosine(w_i, w_j)|.

    `vectors` is a matrix whose columns are the vectors, or a list of 1-D
    vectors taken in order. Symmetric pairs are counted twice.
    """
    W = _as_columns(vectors)
    norms = np.linalg.norm(W, axis=0)
    if np.any(norms == 0):
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    cos = (W.T @ W) / np.outer(norms, norms)
    np.fill_diagonal(cos, 0.0)
    return float(np.abs(cos).sum())


def _abs_cosine_sum_safe(W: np.ndarray) -> float:
    # diagnostics variant: zero columns contribute nothing instead of raising
    norms = np.linalg.norm(W, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    cos = (W.T @ W) / np.outer(safe, safe)
    np.fill_diagonal(cos, 0.0)
    return float(np.abs(cos).sum())


def _derivative_brackets(W: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Per-column derivative sums g_i of the pairwise |cosine| under a unit
    shift of w_i along e_i; the i-th shift should take the sign -sign(g_i)."""
    norms = np.linalg.norm(W, axis=0)
    inner = W.T @ W                      # inner[i, j] = <w_i, w_j>
    basis_proj = E.T @ W                 # basis_proj[i, j] = <e_i, w_j>
    sign_factor = np.where(inner >= 0, 1.0, -1.0)   # derivative of |x|, with sign(0) := +1
    bracket = (
        sign_factor * basis_proj * (norms**2)[:, None]
        - np.diag(basis_proj)[:, None] * np.abs(inner)
    )
    contrib = bracket / norms[None, :]
    np.fill_diagonal(contrib, 0.0)
    return contrib.sum(axis=1)


def delta_signs(W_cols, E_basis) -> np.ndarray:
    """Shift signs in {-1, 0, +1}, one per column of `W_cols`.

    `W_cols` holds the vectors to separate as columns; `E_basis` holds the
    matching orthonormal shift directions as columns. A sign of 0 means the
    derivative of the cosine-similarity sum vanishes for that column (already
    as separated as an orthogonal shift can make it, to first order).
    """
    W = _as_columns(W_cols)
    E = _as_columns(E_basis)
    if W.shape != E.shape:
        raise ValueError(f"vector and basis shapes differ: {W.shape} vs {E.shape}")
    norms = np.linalg.norm(W, axis=0)
    if np.any(norms == 0):
        raise ZeroVector("cannot compute shift signs for a zero vector")
    gram = E.T @ E
    if np.max(np.abs(gram - np.eye(E.shape[1]))) > _ORTHO_TOL:
        raise NonOrthonormalBasis("shift directions must be mutually orthonormal")

    g = _derivative_brackets(W, E)
    inv_norms = 1.0 / norms
    tol = _ZERO_DERIVATIVE_TOL * norms**2 * (inv_norms.sum() - inv_norms)
    deltas = -np.sign(g)
    deltas[np.abs(g) <= tol] = 0.0
    return deltas.astype(np.int64)


@dataclass(frozen=True)
class TargetPrototypes:
    """Per-class regression targets in input-feature geometry.

    Row k is the target for `classes[k]`. `cos_sum_before`/`cos_sum_after`
    report the pairwise |cosine| sum of the whitened means before and after
    the singular-value perturbation (NaN when no perturbation ran).
    """

    prototypes: np.ndarray
    alpha: float
    cos_sum_before: float
    cos_sum_after: float
    classes: tuple[int, ...]
    deltas: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.prototypes.shape[0]

    def row_for(self, cls: int) -> np.ndarray:
        return self.prototypes[self.classes.index(cls)]


def means_prototypes(stats: ClassStats) -> TargetPrototypes:
    """Targets equal to the raw class means (separation disabled)."""
    classes = tuple(stats.classes)
    prototypes = stats.mean_matrix().T.copy()
    return TargetPrototypes(
        prototypes, 0.0, float("nan"), float("nan"), classes, np.zeros(len(classes), dtype=np.int64)
    )


def separate_prototypes(
    stats: ClassStats, whitener: WhitenTransform, alpha: float
) -> TargetPrototypes:
    """Push whitened class means apart and return de-whitened target prototypes.

    Steps: whiten the means-as-columns matrix, take its thin SVD, nudge each
    singular value by +/- alpha per the shift-sign rule (clamping any negative
    result to zero so the spectrum stays valid), reconstruct, and de-whiten.
    With alpha = 0 the targets reproduce the class means up to round-off.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    classes = tuple(stats.classes)
    if len(classes) < 2:
        raise TooFewClasses("prototype separation needs at least two seen classes")

    mean_cols = stats.mean_matrix()
    whitened = whitener.forward @ mean_cols
    U, s, Vt = np.linalg.svd(whitened, full_matrices=False)
    scaled = s[:, None] * Vt  # columns are the whitened means in the left-basis coordinates
    rank = s.size

    if rank == len(classes):
        deltas = delta_signs(scaled, Vt)
    else:
        # More classes than feature dimensions: only `rank` orthogonal shift
        # directions exist, so signs are derived from the leading columns and
        # the remaining classes keep a zero shift.
        g = _derivative_brackets(scaled[:, :rank], Vt[:, :rank])
        deltas = np.zeros(len(classes), dtype=np.int64)
        deltas[:rank] = -np.sign(g)

    s_new = np.maximum(s + alpha * deltas[:rank], 0.0)
    whitened_new = (U * s_new) @ Vt
    prototypes = (whitener.backward @ whitened_new).T

    return TargetPrototypes(
        prototypes,
        float(alpha),
        _abs_cosine_sum_safe(whitened),
        _abs_cosine_sum_safe(whitened_new),
        classes,
        np.asarray(deltas, dtype=np.int64),
    )
