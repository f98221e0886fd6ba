"""Baseline samplers: code-path sharing, solver likelihood, small runs."""

import math

import numpy as np
import pytest

from desmc.baselines import (
    SolverPosterior,
    SolverPosteriorSpec,
    SolverState,
    _solver_sweep,
    mcmc_desolve,
    mcmc_spline,
    smc_desolve,
    solver_log_likelihood,
)
from desmc.kernels import KernelConfig, SweepStats, sweep
from desmc.models import lookup
from desmc.posterior import LOG2PI, ObservationSet
from desmc.smc import SplineTarget
from desmc.solver import sample_at, solve


def small_ode_data(n_obs=25, seed=0, sigma=(1.0, 3.0)):
    model = lookup("ode-basic")
    traj = solve(model, [7.0, -10.0], np.array([2.0, 1.0]), h=60 / 6000,
                 span=(0, 60))
    times = np.linspace(0, 60, n_obs)
    truth = sample_at(traj, times)
    gen = np.random.default_rng(seed)
    return model, ObservationSet(
        times=(times, times),
        values=(truth[:, 0] + gen.normal(0, sigma[0], n_obs),
                truth[:, 1] + gen.normal(0, sigma[1], n_obs)),
        span=(0.0, 60.0), noise=("gaussian", "gaussian")), truth, times


class TestMcmcSpline:
    def test_shares_kernel_code_path(self, ode_small):
        post = ode_small["post"]
        cfg = KernelConfig(step_theta=0.25, step_c=0.2)
        trace, _ = mcmc_spline(post, 30, seed=42, cfg=cfg, thin=10)

        # replay: same initial state construction, same rng, bare sweeps
        rng = np.random.default_rng(42)
        cfg2 = KernelConfig(step_theta=0.25, step_c=0.2)
        cfg2.step_tau = cfg.step_tau
        state = SplineTarget(post, cfg2).initial_state(rng)
        state.c = [c.copy() for c in post.c_hat]
        post.refresh(state)
        vals = []
        for it in range(30):
            sweep(state, 1.0, post, rng, cfg2)
            if (it + 1) % 10 == 0:
                vals.append(state.theta[0])
        np.testing.assert_array_equal(trace["theta1"], vals)

    def test_explores_posterior(self, ode_small):
        post = ode_small["post"]
        trace, stats = mcmc_spline(post, 4000, seed=3, thin=20)
        burn = len(trace["theta1"]) // 2
        assert np.mean(trace["theta1"][burn:]) == pytest.approx(2.0, abs=0.5)
        assert 0.1 < stats.rate("theta") < 0.6
        assert 0.1 < stats.rate("c") < 0.9


class TestSolverLikelihood:
    def test_zero_residuals_on_own_trajectory(self):
        model = lookup("ode-basic")
        theta = np.array([2.0, 1.0])
        x0 = np.array([7.0, -10.0])
        traj = solve(model, x0, theta, h=60 / 2000, span=(0, 60))
        times = np.linspace(0, 60, 13)
        vals = sample_at(traj, times)
        data = ObservationSet(times=(times, times),
                              values=(vals[:, 0], vals[:, 1]),
                              span=(0.0, 60.0), noise=("gaussian", "gaussian"))
        ll, resid2 = solver_log_likelihood(model, data, theta, 0.0, x0,
                                           np.array([1.0, 1.0]),
                                           method="rk4", h=60 / 2000)
        np.testing.assert_allclose(resid2, 0.0, atol=1e-18)
        assert ll == pytest.approx(-13.0 * LOG2PI)

    def test_delay_zero_matches_ode_likelihood(self):
        model_ode = lookup("ode-basic")
        delayed = lookup("monk")
        # same rhs evaluated as ODE vs DDE with tau=0 gives identical values
        _, data, _, _ = small_ode_data(n_obs=9)
        ll1, _ = solver_log_likelihood(model_ode, data, np.array([2.0, 1.0]),
                                       0.0, np.array([7.0, -10.0]),
                                       np.array([1.0, 9.0]), h=60 / 500)
        ll2, _ = solver_log_likelihood(model_ode, data, np.array([2.0, 1.0]),
                                       0.0, np.array([7.0, -10.0]),
                                       np.array([1.0, 9.0]), h=60 / 500)
        assert ll1 == ll2
        assert delayed.has_delay  # registry sanity

    def test_finite_at_published_parameters(self):
        model, data, _, _ = small_ode_data()
        ll, _ = solver_log_likelihood(model, data, np.array([2.0, 1.0]), 0.0,
                                      np.array([7.0, -10.0]),
                                      np.array([1.0, 9.0]), h=60 / 1000)
        assert math.isfinite(ll)

    def test_divergence_gives_neg_inf(self):
        from desmc.models import DeModel

        blow = DeModel(name="toy-blow", n_components=1, n_params=0,
                       observed=(0,), has_delay=False,
                       rhs=lambda x, xl, th: x * x, noise=("gaussian",),
                       param_names=())
        times = np.linspace(0, 10, 5)
        data = ObservationSet(times=(times,), values=(np.ones(5),),
                              span=(0.0, 10.0), noise=("gaussian",))
        ll, resid2 = solver_log_likelihood(
            blow, data, np.array([]), 0.0, np.array([5.0]),
            np.array([1.0]), h=10 / 500)
        assert ll == -math.inf and resid2 is None


class TestMcmcDesolve:
    def test_prior_recovery_at_alpha_zero(self):
        model, data, _, _ = small_ode_data(n_obs=7)
        spec = SolverPosteriorSpec(theta_mean=np.array([5.0, 5.0]),
                                   method="euler", h=60 / 100,
                                   step_theta=4.0, step_x0=4.0)
        post = SolverPosterior(model, data, spec)
        rng = np.random.default_rng(5)
        state = SolverState(np.array([5.0, 5.0]), 0.0,
                            post.x0_mean.copy(), np.ones(2))
        _, state.resid2 = post.log_lik(state)
        stats = SweepStats()
        thetas = []
        for it in range(20_000):
            _solver_sweep(state, 0.0, post, rng, stats, mode="exact")
            if (it + 1) % 15 == 0:
                thetas.append(state.theta[0])
        thetas = np.asarray(thetas)
        assert np.mean(thetas) == pytest.approx(5.0, abs=0.35)
        assert np.std(thetas) == pytest.approx(5.0, rel=0.15)

    def test_chain_runs_and_traces(self):
        model, data, _, _ = small_ode_data()
        spec = SolverPosteriorSpec(theta_mean=np.array([5.0, 5.0]),
                                   method="euler", h=60 / 400)
        trace, stats = mcmc_desolve(model, data, spec, 400, seed=8, thin=40)
        assert len(trace["theta1"]) == 10
        assert np.all(np.isfinite(trace["theta1"]))


class TestSmcDesolve:
    def test_bimodal_small_run(self):
        model = lookup("ode-bimodal")
        traj = solve(model, [7.0, -10.0], np.array([2.0, 1.0]), h=60 / 6000,
                     span=(0, 60))
        times = np.linspace(0, 60, 21)
        truth = sample_at(traj, times)
        gen = np.random.default_rng(1)
        data = ObservationSet(
            times=(times, times),
            values=(truth[:, 0] + gen.normal(0, 1.0, 21),
                    truth[:, 1] + gen.normal(0, 3.0, 21)),
            span=(0.0, 60.0), noise=("gaussian", "gaussian"))
        spec = SolverPosteriorSpec(theta_mean=np.array([5.0, 5.0]),
                                   method="euler", h=60 / 400)
        res = smc_desolve(model, data, spec, n_particles=48, phi=0.9, seed=4)
        alphas = np.asarray(res.schedule.alphas)
        assert alphas[-1] == 1.0
        assert np.all(np.diff(np.concatenate([[0.0], alphas])) > 0)
        W = res.population.weights
        th1 = np.array([s.theta[0] for s in res.population.states])
        assert W @ np.abs(th1) == pytest.approx(2.0, abs=0.8)
