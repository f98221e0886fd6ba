"""B-spline building blocks: bases, derivatives, fits, and the DE penalty.

Walks through the pieces the sampler is built from, printing the checks a
reader would want to see by hand.
"""

import numpy as np

from desmc.bspline import SplineBasis, basis_eval, build_knots, design_matrix, ls_fit
from desmc.models import lookup
from desmc.quadrature import build_fidelity_grid, fidelity_vector

# A clamped cubic basis on [0, 1] with nine interior knots has thirteen
# basis functions; values at any point are nonnegative and sum to one.
kv = build_knots(0.0, 1.0, 9, degree=3)
print(f"basis size L = {kv.n_basis}")
for t in (0.0, 0.31, 0.77, 1.0):
    v = basis_eval(kv, t)
    print(f"  t={t:4.2f}: sum={v.sum():.15f}  nonzero={np.count_nonzero(v)}")

# Least squares reproduces polynomials up to the degree exactly.
times = np.linspace(0, 1, 40)
cubic = 1.0 - times + 0.5 * times**2 - 2.0 * times**3
c = ls_fit(kv, times, cubic)
resid = design_matrix(kv, times) @ c - cubic
print(f"cubic reproduction max |residual| = {np.abs(resid).max():.2e}")

# The DE-fidelity penalty: squared mismatch between the spline derivative
# and the model right-hand side, integrated with composite Simpson rules.
model = lookup("ode-basic")
kv60 = build_knots(0.0, 60.0, 14, 3)
bases = [SplineBasis(kv60, i) for i in range(2)]
grid = build_fidelity_grid(bases, tau=0.0)
rng = np.random.default_rng(0)
coeffs = [rng.normal(size=18), rng.normal(size=18)]
r = fidelity_vector(grid, model, coeffs, np.array([2.0, 1.0]))
print(f"random spline penalty R = {r.round(2)} (total {r.sum():.2f})")

# A spline that actually follows the system has a near-zero penalty: fit
# the solver trajectory and re-evaluate.
from desmc.solver import sample_at, solve

traj = solve(model, [7.0, -10.0], np.array([2.0, 1.0]), h=0.006, span=(0, 60))
dense = np.linspace(0, 60, 400)
states = sample_at(traj, dense)
coeffs_fit = [ls_fit(kv60, dense, states[:, i]) for i in range(2)]
r_fit = fidelity_vector(grid, model, coeffs_fit, np.array([2.0, 1.0]))
print(f"solution-fitted penalty R = {r_fit.round(5)} (total {r_fit.sum():.5f})")
