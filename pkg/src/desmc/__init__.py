"""Bayesian inference for ODE/DDE parameters without a solver in the loop.

Trajectories are represented by clamped cubic B-splines, the differential
equation enters through an integrated squared-residual penalty, and the
joint posterior over DE parameters, delay, spline coefficients, noise
variances, and the smoothing weight is sampled with an adaptive annealed
sequential Monte Carlo sampler.  Solver-based MCMC/SMC baselines are
included for comparison.
"""

from .bspline import KnotVector, SplineBasis, basis_deriv, basis_eval, build_knots, ls_fit
from .kernels import KernelConfig, sweep
from .models import DeModel, lookup, model_names, register
from .posterior import ObservationSet, ParticleState, PriorSpec, SplinePosterior
from .quadrature import FidelityGrid, build_grid, penalty_component, total_penalty
from .smc import (
    AnnealingSchedule,
    ParticlePopulation,
    SMCResult,
    ess,
    next_alpha,
    rcess,
    run_annealed_smc,
    run_spline_smc,
    systematic_resample,
)
from .solver import Trajectory, SolverDivergence, sample_at, solve
from .summary import SummaryReport, rmse, summarize, weighted_quantile

__version__ = "0.1.0"

__all__ = [
    "KnotVector", "SplineBasis", "basis_eval", "basis_deriv", "build_knots",
    "ls_fit", "KernelConfig", "sweep", "DeModel", "lookup", "model_names",
    "register", "ObservationSet", "ParticleState", "PriorSpec",
    "SplinePosterior", "FidelityGrid", "build_grid", "penalty_component",
    "total_penalty", "AnnealingSchedule", "ParticlePopulation", "SMCResult",
    "ess", "next_alpha", "rcess", "run_annealed_smc", "run_spline_smc",
    "systematic_resample", "Trajectory", "SolverDivergence", "sample_at",
    "solve", "SummaryReport", "rmse", "summarize", "weighted_quantile",
    "__version__",
]
