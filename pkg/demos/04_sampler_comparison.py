"""Four samplers on the bimodal ODE: spline/solver targets, SMC/MCMC each.

Reduced from the published configuration so the solver-based pair finishes
in minutes (they re-integrate the system at every proposal, which is the
point of the comparison).  Set FULL_SCALE to run the real thing.
"""

import time

import numpy as np

from desmc.baselines import SolverPosteriorSpec, mcmc_desolve, mcmc_spline, smc_desolve
from desmc.experiments import ODE_SETUP, build_posterior, simulate_observations
from desmc.kernels import KernelConfig
from desmc.models import lookup
from desmc.smc import run_spline_smc

FULL_SCALE = False

model = lookup("ode-bimodal")
s = ODE_SETUP
n_obs = s["n_obs"] if FULL_SCALE else 41
times = np.linspace(*s["span"], n_obs)
data, traj, _ = simulate_observations(model, s["theta"], 0.0, s["x0"], times,
                                      s["sigma"], seed=11)
post = build_posterior(model, data, s["n_interior"])

# --- annealed SMC on the spline posterior --------------------------------
K = 500 if FULL_SCALE else 120
res = run_spline_smc(post, K, 0.9, 0.5, seed=1, cfg=KernelConfig(adapt=True))
W = res.population.weights
th1 = np.array([st.theta[0] for st in res.population.states])
print(f"SMC-spline   R={res.diagnostics['n_iterations']:4d}  "
      f"sign weights {W[th1 > 0].sum():.2f}/{W[th1 < 0].sum():.2f}  "
      f"|theta1| mean {W @ np.abs(th1):.3f}")

# --- plain MCMC on the spline posterior ----------------------------------
iters = 400_000 if FULL_SCALE else 40_000
t0 = time.perf_counter()
trace, stats = mcmc_spline(post, iters, seed=2, thin=max(iters // 1000, 1))
spline_ms = 1000 * (time.perf_counter() - t0) / iters
burn = len(trace["theta1"]) // 4
kept = trace["theta1"][burn:]
frac_pos = np.mean(kept > 0)
print(f"MCMC-spline  theta acc {stats.rate('theta'):.1%}  "
      f"sign occupancy {frac_pos:.2f}/{1 - frac_pos:.2f} "
      f"(single mode: {min(frac_pos, 1 - frac_pos) < 0.02})")

# --- solver-based pair (deliberately coarser integrator) -----------------
spec = SolverPosteriorSpec(theta_mean=np.array([5.0, 5.0]), method="euler",
                           h=(60 / 6000) if FULL_SCALE else (60 / 600))
iters_de = 10_000 if FULL_SCALE else 600
t0 = time.perf_counter()
trace_de, stats_de = mcmc_desolve(model, data, spec, iters_de, seed=3,
                                  thin=max(iters_de // 200, 1))
solver_ms = 1000 * (time.perf_counter() - t0) / iters_de
print(f"MCMC-deSolve theta acc {stats_de.rate('theta'):.1%}  "
      f"theta1 trace tail {trace_de['theta1'][-3:].round(2)} (often stuck)")

res_de = smc_desolve(model, data, spec, n_particles=K // 2,
                     phi=0.999 if FULL_SCALE else 0.95, seed=4)
W2 = res_de.population.weights
th1_de = np.array([st.theta[0] for st in res_de.population.states])
print(f"SMC-deSolve  R={res_de.diagnostics['n_iterations']:4d}  "
      f"|theta1| mean {W2 @ np.abs(th1_de):.3f}")

print(f"\nper-sweep cost: spline {spline_ms:.2f} ms vs solver {solver_ms:.2f} ms "
      f"({solver_ms / spline_ms:.0f}x)")
