"""Blowfly population analysis: delayed logistic growth on the log scale.

Fits the bundled daily counts (see src/desmc/data/README.md for the data
provenance).  The delay estimate is the time for an egg to grow into a
pupa; the growth rate and the resource limit are strongly positively
correlated, as more food supports faster growth.
"""

import numpy as np

from desmc.experiments import blowfly_study, load_blowfly

day, count = load_blowfly()
print(f"{day.size} daily counts, range {count.min():.0f}..{count.max():.0f}")

result, post, report = blowfly_study(seed_smc=7)
print(f"R = {result.diagnostics['n_iterations']}, "
      f"wall {result.diagnostics['wall_time']:.0f}s")
for name in ("nu", "P", "tau", "sigma2_1", "lambda", "x1_0"):
    lo, hi = report.intervals[name]
    print(f"{name:9s} mean {report.means[name]:7.3f}  CI ({lo:.3f}, {hi:.3f})")
print("correlations:", {k: round(v, 3) for k, v in report.correlations.items()})

# the fitted log-population curve vs the data envelope
band = report.bands["x1"]
log_counts = np.log(count)
inside = np.mean((np.interp(day, band["times"], band["lower"]) - 2 <= log_counts)
                 & (log_counts <= np.interp(day, band["times"], band["upper"]) + 2))
print(f"log-counts within band +- 2: {100 * inside:.0f}%")
