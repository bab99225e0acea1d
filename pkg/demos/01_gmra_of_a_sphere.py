"""Build a multiscale analysis of a sampled sphere and watch it refine.

We sample 20,000 points from a 2-sphere embedded in R^20, build the
binary multiscale tree, and check how the distance from fresh points to
their nearest local affine piece shrinks level by level.  The health
report at the end summarizes center separation, parent links and tube
containment per level.
"""

import numpy as np

from manifold1bit import approximation_error, build_gmra, sample_manifold, validate_gmra

train = sample_manifold("sphere", 20000, 20, seed=11, mu=0.05, d=2)
print(f"training cloud: {train.shape[0]} points in R^{train.shape[1]}, "
      f"radius {np.linalg.norm(train, axis=1).max():.3f}")

gmra = build_gmra(train, d=2, j_max=10, seed=1)
print(f"built {gmra.num_levels} levels; cells per level:",
      [lvl.K for lvl in gmra.levels])

# fresh samples of the same embedded sphere (same frame_seed)
fresh = sample_manifold("sphere", 2000, 20, seed=12, mu=0.05, d=2, frame_seed=11)
print("\nmean distance to the nearest affine piece, by level:")
for j in range(gmra.num_levels):
    stats = approximation_error(gmra, j, fresh)
    print(f"  level {j:>2}: mean {stats.mean:.5f}   max {stats.max:.5f}")

report = validate_gmra(gmra, fresh)
print("\nper-level health (separation x 2^j, count / 2^(dj), tube containment):")
for s in report.levels:
    print(f"  level {s.j:>2}: sep {s.separation_ratio:7.3f}  count {s.count_ratio:8.5f}  "
          f"tube {100 * s.tube_fraction:5.1f}%")
print(f"first level with 99% tube containment: {report.j0_estimate}")
