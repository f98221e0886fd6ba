"""Data generation, study presets, and scripted reproductions.

Each study preset pins the published setup (spans, observation counts, noise
levels, basis sizes, particle counts, rCESS thresholds) and exposes the
handful of knobs the harness scales down for replicated runs.  Random number
use is fully seeded: replicate seeds are spawned from one master seed, so
every study is reproducible and independent of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .bspline import SplineBasis, build_knots
from .kernels import KernelConfig
from .models import DeModel, lookup
from .posterior import ObservationSet, PriorSpec, SplinePosterior
from .smc import SMCResult, run_spline_smc, systematic_resample
from .solver import Trajectory, sample_at, solve
from .summary import summarize, weighted_quantile

__all__ = [
    "simulate_observations", "observation_set_from_raw", "default_priors",
    "default_kernel", "build_posterior", "load_blowfly",
    "ode_study", "monk_study", "hutchinson_fit_study", "blowfly_study",
    "coverage_study", "rmse_trend_study", "equal_weight_states",
    "phi_sweep", "particle_sweep", "basis_sweep", "lambda_sweep",
]


def simulate_observations(model, theta, tau, x0, times, sigma, seed,
                          h=None, method="rk4"):
    """Solve the system and add observation noise at the requested times.

    Gaussian components get additive noise on the state scale; lognormal
    components get additive Gaussian noise on the (log) state scale, with the
    raw observation being its exponential.  Returns (ObservationSet, truth
    trajectory, raw observation arrays).
    """
    times = np.asarray(times, dtype=float)
    span = (float(times.min()), float(times.max()))
    traj = solve(model, x0, np.asarray(theta, float), tau=tau, h=h,
                 span=span, method=method)
    states = sample_at(traj, times)
    rng = np.random.default_rng(seed)
    sigma = np.broadcast_to(np.asarray(sigma, float), (len(model.observed),))
    values, raws = [], []
    for k, i in enumerate(model.observed):
        noisy = states[:, i] + sigma[k] * rng.standard_normal(times.size)
        values.append(noisy)
        raws.append(np.exp(noisy) if model.noise[k] == "lognormal" else noisy)
    data = ObservationSet(times=tuple(times.copy() for _ in model.observed),
                          values=tuple(values), span=span, noise=model.noise)
    return data, traj, raws


def observation_set_from_raw(model, times_per_comp, raw_per_comp, span=None):
    """Build an ObservationSet from raw measurements (log-transforms counts)."""
    values = []
    for k, raw in enumerate(raw_per_comp):
        raw = np.asarray(raw, dtype=float)
        if model.noise[k] == "lognormal":
            if np.any(raw <= 0):
                raise ValueError("lognormal observations must be positive")
            values.append(np.log(raw))
        else:
            values.append(raw)
    times_per_comp = [np.asarray(t, dtype=float) for t in times_per_comp]
    if span is None:
        span = (min(float(t.min()) for t in times_per_comp),
                max(float(t.max()) for t in times_per_comp))
    return ObservationSet(times=tuple(times_per_comp), values=tuple(values),
                          span=span, noise=model.noise)


def default_priors(model: DeModel, span) -> PriorSpec:
    """Published prior/reference hyper-parameters per built-in model."""
    if model.name in ("ode-basic", "ode-bimodal"):
        return PriorSpec(theta_mean=np.array([5.0, 5.0]), sigma_theta=5.0)
    if model.name == "hutchinson-log":
        return PriorSpec(theta_mean=np.zeros(2), sigma_theta=5.0,
                         tau_bounds=(0.0, 50.0))
    if model.name == "monk":
        # the expression threshold lives near 100; its prior scale follows
        return PriorSpec(theta_mean=np.zeros(3),
                         sigma_theta=np.array([5.0, 5.0, 100.0]),
                         tau_bounds=(0.0, 50.0))
    return PriorSpec(theta_mean=np.zeros(model.n_params),
                     tau_bounds=(0.0, span[1] - span[0]) if model.has_delay else None)


def default_kernel(adapt=True, sweeps=1, c_repeats=1) -> KernelConfig:
    return KernelConfig(adapt=adapt, sweeps=sweeps, c_repeats=c_repeats)


def build_posterior(model, data: ObservationSet, n_interior, priors=None,
                    degree=3, n_quad=3, c_hat=None) -> SplinePosterior:
    kv = build_knots(data.span[0], data.span[1], n_interior, degree)
    bases = [SplineBasis(kv, i) for i in range(model.n_components)]
    if priors is None:
        priors = default_priors(model, data.span)
    return SplinePosterior(model, bases, data, priors, c_hat=c_hat, n_quad=n_quad)


def equal_weight_states(result: SMCResult, seed=0):
    """One final systematic resample, for consumers that need unweighted draws."""
    pop = result.population
    rng = np.random.default_rng(seed)
    idx = systematic_resample(pop.weights, rng)
    return [pop.states[i].copy() for i in idx]


# ---------------------------------------------------------------------------
# study presets
# ---------------------------------------------------------------------------

ODE_SETUP = {
    "theta": (2.0, 1.0), "x0": (7.0, -10.0), "sigma": (1.0, 3.0),
    "n_obs": 121, "span": (0.0, 60.0), "n_interior": 14,
    "n_particles": 500, "phi": 0.9, "resample": 0.5,
}

MONK_SETUP = {
    "theta": (0.03, 0.03, 100.0), "tau": 25.0, "x0": (7.0, -10.0),
    "sigma": (1.0, 5.0), "n_obs": 101, "span": (0.0, 500.0),
    "n_interior": 24, "n_particles": 300, "phi": 0.9, "resample": 0.5,
}

HUTCH_FIT_SETUP = {
    "theta": (0.8, 2.0), "tau": 3.0, "x0_count": 3500.0, "sigma": 0.4,
    "span": (0.0, 100.0), "n_interior": 49, "phi": 0.9, "resample": 0.5,
}

HUTCH_COVERAGE_SETUP = {
    "theta": (0.22, 2.0), "tau": 8.0, "x0_count": 3500.0, "sigma": 0.2,
    "n_obs": 200, "span": (0.0, 130.0), "n_interior": 16,
    "n_particles": 200, "phi": 0.98, "resample": 0.5,
}

BLOWFLY_SETUP = {
    "n_interior": 34, "n_particles": 500, "phi": 0.9, "resample": 0.5,
}


def _ode_data(model_name, seed):
    s = ODE_SETUP
    model = lookup(model_name)
    times = np.linspace(*s["span"], s["n_obs"])
    return simulate_observations(model, s["theta"], 0.0, s["x0"], times,
                                 s["sigma"], seed)


def ode_study(seed_data=11, seed_smc=12, model_name="ode-bimodal",
              n_particles=None, phi=None, kernel=None):
    """Bimodal ODE fit at the published configuration."""
    s = ODE_SETUP
    model = lookup(model_name)
    data, traj, _ = _ode_data(model_name, seed_data)
    post = build_posterior(model, data, s["n_interior"])
    cfg = kernel if kernel is not None else default_kernel()
    result = run_spline_smc(
        post, n_particles or s["n_particles"], phi or s["phi"],
        s["resample"], seed_smc, cfg=cfg)
    return result, post, traj


def monk_study(seed_data, seed_smc, n_particles=None, phi=None):
    """Monk oscillator replicate: fresh data, one SMC run, summary report."""
    s = MONK_SETUP
    model = lookup("monk")
    times = np.linspace(*s["span"], s["n_obs"])
    data, traj, _ = simulate_observations(
        model, s["theta"], s["tau"], s["x0"], times, s["sigma"], seed_data)
    post = build_posterior(model, data, s["n_interior"])
    result = run_spline_smc(post, n_particles or s["n_particles"],
                            phi or s["phi"], s["resample"], seed_smc,
                            cfg=default_kernel(sweeps=2))
    pop = result.population
    report = summarize(pop.states, pop.weights, model, bases=post.bases,
                       metadata=result.diagnostics)
    return result, post, report, traj


def hutchinson_fit_study(n_obs, seed_data, seed_smc, n_particles=500,
                         phi=None, n_interior=None):
    """One Hutchinson fit scenario; returns the RMSE of the log-trajectory."""
    s = HUTCH_FIT_SETUP
    model = lookup("hutchinson-log")
    times = np.linspace(*s["span"], n_obs)
    w0 = math.log(s["x0_count"])
    data, traj, _ = simulate_observations(
        model, s["theta"], s["tau"], [w0], times, s["sigma"], seed_data)
    post = build_posterior(model, data,
                           s["n_interior"] if n_interior is None else n_interior)
    result = run_spline_smc(post, n_particles, phi or s["phi"], s["resample"],
                            seed_smc, cfg=default_kernel(sweeps=2))
    pop = result.population
    truth_at_obs = sample_at(traj, times)[:, 0]
    report = summarize(pop.states, pop.weights, model, bases=post.bases,
                       truth={0: (times, truth_at_obs)},
                       metadata=result.diagnostics)
    return result, post, report


def coverage_study(n_replicates, master_seed, n_particles=None, phi=None,
                   setup=None, progress=None):
    """Replicated CI coverage for the Hutchinson parameters (nu, P, tau, sigma).

    Every replicate simulates a fresh data set and runs the full sampler;
    coverage is the fraction of replicates whose central 95% interval
    contains the generating value.
    """
    s = dict(HUTCH_COVERAGE_SETUP)
    if setup:
        s.update(setup)
    model = lookup("hutchinson-log")
    truth = {"nu": s["theta"][0], "P": s["theta"][1], "tau": s["tau"],
             "sigma_1": s["sigma"]}
    times = np.linspace(*s["span"], s["n_obs"])
    w0 = math.log(s["x0_count"])
    seeds = np.random.SeedSequence(master_seed).spawn(n_replicates)
    covered = {k: 0 for k in truth}
    ci_accum = {k: np.zeros(2) for k in truth}
    reports = []
    for rep, seed in enumerate(seeds):
        child = seed.generate_state(2)
        data, _, _ = simulate_observations(
            model, s["theta"], s["tau"], [w0], times, s["sigma"],
            np.random.SeedSequence(entropy=int(child[0])))
        post = build_posterior(model, data, s["n_interior"])
        result = run_spline_smc(
            post, n_particles or s["n_particles"], phi or s["phi"],
            s["resample"], int(child[1]), cfg=default_kernel(sweeps=2, c_repeats=3))
        pop = result.population
        report = summarize(pop.states, pop.weights, model,
                           metadata=result.diagnostics)
        reports.append(report)
        for name, value in truth.items():
            lo, hi = report.intervals[name]
            covered[name] += int(lo <= value <= hi)
            ci_accum[name] += (lo, hi)
        if progress is not None:
            progress(rep + 1, n_replicates, report)
    coverage = {k: covered[k] / n_replicates for k in truth}
    avg_ci = {k: tuple(ci_accum[k] / n_replicates) for k in truth}
    return {"coverage": coverage, "avg_ci": avg_ci, "truth": truth,
            "n_replicates": n_replicates, "reports": reports}


def rmse_trend_study(seeds, n_obs_levels=(101, 201, 401), n_particles=200,
                     progress=None):
    """RMSE of the fitted log-trajectory across observation counts and seeds."""
    out = np.empty((len(seeds), len(n_obs_levels)))
    for a, seed in enumerate(seeds):
        children = np.random.SeedSequence(seed).spawn(len(n_obs_levels))
        for b, n_obs in enumerate(n_obs_levels):
            st = children[b].generate_state(2)
            _, _, report = hutchinson_fit_study(
                n_obs, np.random.SeedSequence(entropy=int(st[0])),
                int(st[1]), n_particles=n_particles)
            out[a, b] = report.rmses["x1"]
            if progress is not None:
                progress(seed, n_obs, out[a, b])
    return out


def load_blowfly():
    """Bundled blowfly population counts: (day, count) arrays."""
    ref = resources.files("desmc").joinpath("data/blowfly.csv")
    rows = np.loadtxt(str(ref), delimiter=",", skiprows=1)
    return rows[:, 0], rows[:, 1]


def blowfly_study(seed_smc=101, n_particles=None, phi=None):
    """Fit the bundled blowfly counts with the log-scale growth model."""
    s = BLOWFLY_SETUP
    model = lookup("hutchinson-log")
    day, count = load_blowfly()
    data = observation_set_from_raw(model, [day], [count])
    priors = default_priors(model, data.span)
    post = build_posterior(model, data, s["n_interior"], priors=priors)
    result = run_spline_smc(post, n_particles or s["n_particles"],
                            phi or s["phi"], s["resample"], seed_smc,
                            cfg=default_kernel(sweeps=2))
    pop = result.population
    report = summarize(pop.states, pop.weights, model, bases=post.bases,
                       corr_pairs=(("nu", "P"), ("nu", "tau"), ("P", "tau")),
                       metadata=result.diagnostics)
    return result, post, report


# ---------------------------------------------------------------------------
# tuning sweeps (threshold, particle count, basis size, fixed smoothing)
# ---------------------------------------------------------------------------

def _sweep_core(variants, run_one, n_datasets, master_seed):
    out = {}
    seeds = np.random.SeedSequence(master_seed).spawn(n_datasets)
    for variant in variants:
        rows = []
        for ds, seed in enumerate(seeds):
            st = seed.generate_state(2)
            rows.append(run_one(variant, int(st[0]), int(st[1])))
        out[variant] = rows
    return out


def phi_sweep(phis=(0.8, 0.9, 0.99), n_datasets=3, master_seed=2024,
              n_particles=500, n_interior=9):
    def run_one(phi, seed_data, seed_smc):
        model = lookup("ode-basic")
        data, traj, _ = _ode_data("ode-basic", seed_data)
        post = build_posterior(model, data, n_interior)
        res = run_spline_smc(post, n_particles, phi, 0.5, seed_smc,
                             cfg=default_kernel())
        pop = res.population
        times = data.times[0]
        truth = sample_at(traj, times)
        return summarize(pop.states, pop.weights, model, bases=post.bases,
                         truth={0: (times, truth[:, 0]), 1: (times, truth[:, 1])},
                         metadata=res.diagnostics)

    return _sweep_core(phis, run_one, n_datasets, master_seed)


def particle_sweep(counts=(10, 100, 2000), n_datasets=3, master_seed=2025,
                   phi=0.9, n_interior=9):
    def run_one(k, seed_data, seed_smc):
        model = lookup("ode-basic")
        data, traj, _ = _ode_data("ode-basic", seed_data)
        post = build_posterior(model, data, n_interior)
        res = run_spline_smc(post, k, phi, 0.5, seed_smc, cfg=default_kernel())
        pop = res.population
        return summarize(pop.states, pop.weights, model,
                         metadata=res.diagnostics)

    return _sweep_core(counts, run_one, n_datasets, master_seed)


def basis_sweep(n_basis_levels=(7, 11, 16, 31, 61), n_datasets=2,
                master_seed=2026, n_particles=1000, phi=0.95):
    def run_one(n_basis, seed_data, seed_smc):
        model = lookup("ode-basic")
        data, traj, _ = _ode_data("ode-basic", seed_data)
        post = build_posterior(model, data, n_basis - 4)
        res = run_spline_smc(post, n_particles, phi, 0.5, seed_smc,
                             cfg=default_kernel())
        pop = res.population
        times = data.times[0]
        truth = sample_at(traj, times)
        return summarize(pop.states, pop.weights, model, bases=post.bases,
                         truth={0: (times, truth[:, 0]), 1: (times, truth[:, 1])},
                         metadata=res.diagnostics)

    return _sweep_core(n_basis_levels, run_one, n_datasets, master_seed)


def lambda_sweep(lambdas=(0.1, 1.0, 10.0, 100.0, None), n_datasets=2,
                 master_seed=2027, n_particles=1000, phi=0.95, n_interior=12):
    """Fixed smoothing weights against the fully Bayesian treatment (None)."""

    def run_one(lam, seed_data, seed_smc):
        model = lookup("ode-basic")
        data, traj, _ = _ode_data("ode-basic", seed_data)
        post = build_posterior(model, data, n_interior)
        cfg = default_kernel()
        cfg.fix_lambda = lam
        res = run_spline_smc(post, n_particles, phi, 0.5, seed_smc, cfg=cfg)
        pop = res.population
        return summarize(pop.states, pop.weights, model,
                         metadata=res.diagnostics)

    return _sweep_core(lambdas, run_one, n_datasets, master_seed)
