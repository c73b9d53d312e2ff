"""Contrastive projection layer: analytic per-head regression onto target prototypes.

Each head owns an independent random projection, the Gram matrix of its random
features, and per-class random-feature sums. The cross matrix for the ridge
solve is never accumulated directly: it is rebuilt after every task as
(per-class sums) @ (target prototypes), so when the targets move (new classes
shift the whole prototype set) only the solve is redone. Raw per-task data is
never revisited.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .analytic import RPMatrix, project, random_projection, ridge_solve
from .errors import NotFitted, StatsOutOfSync
from .repulsion import TargetPrototypes, means_prototypes, separate_prototypes
from .stats import DEFAULT_EPS_SCALE, ClassStats, make_whitener


@dataclass(frozen=True)
class CPHead:
    """One head: random projection, its Gram sum, per-class feature sums, solved weights."""

    rp: RPMatrix
    gram: np.ndarray
    proto_sums: np.ndarray  # (out_dim, max_class_id + 1); zero columns for unseen classes
    weights: np.ndarray | None = None

    @property
    def out_dim(self) -> int:
        return self.rp.out_dim


@dataclass(frozen=True)
class CPState:
    """All heads plus the shared target prototypes and solve configuration."""

    heads: tuple[CPHead, ...]
    lam: float
    alpha: float
    use_repulsion: bool = True
    eps_scale: float = DEFAULT_EPS_SCALE
    prototypes: TargetPrototypes | None = None

    @property
    def dim(self) -> int:
        return self.heads[0].rp.dim

    @property
    def fitted(self) -> bool:
        return all(h.weights is not None for h in self.heads)


def make_cp_state(
    dim: int,
    out_dim: int,
    num_heads: int,
    lam: float,
    alpha: float,
    base_seed: int,
    use_repulsion: bool = True,
    eps_scale: float = DEFAULT_EPS_SCALE,
) -> CPState:
    """Fresh state with `num_heads` independently seeded projections (base_seed + h)."""
    heads = tuple(
        CPHead(
            rp=random_projection(dim, out_dim, base_seed + h),
            gram=np.zeros((out_dim, out_dim)),
            proto_sums=np.zeros((out_dim, 0)),
        )
        for h in range(num_heads)
    )
    return CPState(heads, lam, alpha, use_repulsion, eps_scale)


def derive_prototypes(state: CPState, stats: ClassStats) -> TargetPrototypes:
    """Targets for the current class set: separated means, or raw means when
    separation is disabled or fewer than two classes exist."""
    if not state.use_repulsion or len(stats.classes) < 2:
        return means_prototypes(stats)
    whitener = make_whitener(stats, state.eps_scale)
    return separate_prototypes(stats, whitener, state.alpha)


def cp_update(state: CPState, X: np.ndarray, y: np.ndarray, stats: ClassStats) -> CPState:
    """Absorb one task and re-solve every head.

    `stats` must already include this task's data. Per head: the Gram matrix
    and the task classes' feature sums are extended in place of nothing (prior
    columns are reused untouched), the target prototypes are recomputed over
    all seen classes, and the projection weights are re-solved from scratch.
    Returns a new state; the argument is not mutated.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    task_classes = [int(c) for c in np.unique(y)]
    missing = [c for c in task_classes if c not in stats.counts]
    if missing:
        raise StatsOutOfSync(f"classes {missing} not present in statistics; update stats first")

    prototypes = derive_prototypes(state, stats)
    seen = list(prototypes.classes)
    width = max(seen) + 1

    new_heads = []
    for head in state.heads:
        Z = project(head.rp, X)
        gram = head.gram + Z.T @ Z
        proto_sums = np.zeros((head.out_dim, max(width, head.proto_sums.shape[1])))
        proto_sums[:, : head.proto_sums.shape[1]] = head.proto_sums
        for c in task_classes:
            proto_sums[:, c] += Z[y == c].sum(axis=0)
        cross = proto_sums[:, seen] @ prototypes.prototypes
        weights = ridge_solve(gram, cross, state.lam)
        new_heads.append(CPHead(head.rp, gram, proto_sums, weights))

    return replace(state, heads=tuple(new_heads), prototypes=prototypes)


def cp_transform(state: CPState, X: np.ndarray) -> np.ndarray:
    """Head-averaged projection of `X` into prototype space (n x dim)."""
    if not state.fitted:
        raise NotFitted("contrastive projection has no solved weights yet")
    X = np.asarray(X, dtype=np.float64)
    out = np.zeros((X.shape[0], state.heads[0].weights.shape[1]))
    for head in state.heads:
        out += project(head.rp, X) @ head.weights
    return out / len(state.heads)
