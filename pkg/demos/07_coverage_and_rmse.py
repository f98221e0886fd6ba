"""Replicated frequentist checks of the Bayesian machinery (desk scale).

Coverage: simulate many data sets from known delayed-growth parameters and
count how often the 95% intervals contain them.  RMSE: the fitted
log-trajectory improves as observations accumulate.  Scale the knobs up
for publication-grade numbers.
"""

import numpy as np

from desmc.experiments import coverage_study, rmse_trend_study

print("--- coverage (replicates are full SMC runs; be patient) ---")
out = coverage_study(4, master_seed=20260808, n_particles=100, phi=0.9,
                     setup={"n_obs": 100, "n_interior": 10},
                     progress=lambda k, n, rep: print(f"  replicate {k}/{n}"))
for name, frac in out["coverage"].items():
    lo, hi = out["avg_ci"][name]
    print(f"{name:8s} truth {out['truth'][name]:5.2f}  covered {100*frac:3.0f}%  "
          f"avg CI ({lo:.3f}, {hi:.3f})")

print("--- RMSE versus observation count ---")
table = rmse_trend_study(seeds=[1, 2], n_obs_levels=(101, 201), n_particles=100)
for row, seed in zip(table, (1, 2)):
    print(f"seed {seed}: " + "  ".join(f"{v:.3f}" for v in row))
