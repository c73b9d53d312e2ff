"""Watch the repulsion step push whitened class means apart.

Two classes are placed at a small angle so their whitened means are nearly
collinear. The singular-value nudge reduces the summed |cosine| between the
means; sweeping the shift scale alpha shows the trade-off between separation
and staying close to the original geometry.
"""

import numpy as np

from anacp import (
    cosine_sum,
    delta_signs,
    empty_stats,
    make_whitener,
    separate_prototypes,
    update_stats,
)

rng = np.random.default_rng(3)
dim, per_class = 12, 300
u = rng.standard_normal(dim)
u /= np.linalg.norm(u)
v = rng.standard_normal(dim)
v -= (v @ u) * u
v /= np.linalg.norm(v)
means = np.stack([4.0 * u, 4.0 * (np.cos(0.2) * u + np.sin(0.2) * v)])

X = np.vstack([means[c] + 0.8 * rng.standard_normal((per_class, dim)) for c in range(2)])
y = np.repeat([0, 1], per_class)
stats = update_stats(empty_stats(dim), X, y)
whitener = make_whitener(stats)

whitened = whitener.forward @ stats.mean_matrix()
print(f"whitened means |cos| sum before any shift: {cosine_sum(whitened):.4f}")

U, s, Vt = np.linalg.svd(whitened, full_matrices=False)
print(f"singular values: {np.round(s, 3)}")
print(f"shift signs:     {delta_signs(s[:, None] * Vt, Vt)}")

print(f"\n{'alpha':>8}  {'|cos| sum after':>16}  {'target drift (rel)':>18}")
for alpha in (0.0, 0.01, 0.1, 0.5, 1.0, 2.0):
    targets = separate_prototypes(stats, whitener, alpha)
    drift = np.linalg.norm(targets.prototypes - stats.mean_matrix().T)
    drift /= np.linalg.norm(stats.mean_matrix())
    print(f"{alpha:8.2f}  {targets.cos_sum_after:16.4f}  {drift:18.4f}")

print("\nsmall shifts reduce the cosine sum while barely moving the targets;")
print("large shifts separate more aggressively at the cost of geometry drift.")
