"""A small rate-distortion sweep, written to CSV.

Error decays with the oversampling ratio until it hits the floor set by
the multiscale approximation at the chosen level; finer levels have
lower floors.  This is a reduced version of the full experiment (see
the README for the full configuration); the CSV it writes is what the
plotting frontend consumes.
"""

from manifold1bit import ExperimentConfig, run_experiment, sigma_delta_spec

cfg = ExperimentConfig(
    ambient_dim=20,
    manifold="sphere",
    intrinsic_dim=2,
    n_train=8000,
    n_test=25,
    j_max=10,
    levels=[6, 10],
    schemes=[sigma_delta_spec(2), sigma_delta_spec(4)],
    p=10,
    lambdas=[5, 17, 65, 257],
    ensemble="gaussian",
    seed=2026,
    mu=0.05,
    out="demo_results.csv",
)

rows = run_experiment(cfg)
print(f"{'scheme':>12} {'j':>3} {'lam':>5} {'m':>6} {'mean rel err':>13}")
for row in rows:
    print(f"{row.scheme + str(row.r_or_beta or ''):>12} {row.j:>3} {row.lam:>5} "
          f"{row.m:>6} {row.mean_rel_err:>13.5f}")
print(f"\nwrote {len(rows)} rows -> {cfg.out}")
print("render with the frontend:  node frontend/dist/cli.js plot "
      "--in demo_results.csv --out demo_results.svg")
