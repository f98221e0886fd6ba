"""Regenerate the bundled blowfly series (see src/desmc/data/README.md).

Delayed logistic growth on the log scale, one year of daily counts with
multiplicative observation noise.  Writes src/desmc/data/blowfly.csv.
"""

from pathlib import Path

import numpy as np

from desmc.models import lookup
from desmc.solver import sample_at, solve

RATE, LIMIT, DELAY, W0, NOISE_SD = 0.25, 2.4, 8.0, 8.1, 0.6

model = lookup("hutchinson-log")
traj = solve(model, [W0], np.array([RATE, LIMIT]), tau=DELAY,
             h=360 / 20000, span=(0, 360))
days = np.arange(361, dtype=float)
log_pop = sample_at(traj, days)[:, 0]
rng = np.random.default_rng(19540101)
counts = np.maximum(np.round(np.exp(log_pop + NOISE_SD * rng.standard_normal(days.size))), 1.0)

target = Path(__file__).resolve().parent.parent / "src/desmc/data/blowfly.csv"
with open(target, "w") as fh:
    fh.write("day,count\n")
    for d, c in zip(days, counts):
        fh.write(f"{int(d)},{int(c)}\n")
print(f"wrote {target} ({days.size} rows, counts {counts.min():.0f}..{counts.max():.0f})")
