"""Acceptance criteria, one test per criterion, with fixed documented seeds.

Criteria 1-7 are stochastic reproductions of the library's headline
behaviours with deliberately wider pass windows than the published point
values; criterion 8 is the numerical property battery (quick forms here,
exhaustive forms in the per-module suites).  Each test prints one
PASS/FAIL line.  The replicated studies are heavy; the whole module is a
few hours single-core.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats as sps

from desmc.baselines import SolverPosteriorSpec, mcmc_desolve, mcmc_spline
from desmc.bspline import basis_matrix, build_knots, deriv_matrix
from desmc.experiments import (
    MONK_SETUP,
    ODE_SETUP,
    blowfly_study,
    build_posterior,
    coverage_study,
    monk_study,
    ode_study,
    rmse_trend_study,
    simulate_observations,
)
from desmc.kernels import KernelConfig
from desmc.models import lookup
from desmc.quadrature import build_grid
from desmc.smc import (
    next_alpha,
    rcess,
    run_annealed_smc,
    run_spline_smc,
    systematic_resample,
)
from desmc.summary import weighted_quantile

SEED_DATA_BIMODAL = 11
SEED_SMC_BIMODAL = 12
SEEDS_MCMC_CONTRAST = list(range(1001, 1011))
SEEDS_MONK = [(3000 + i, 3100 + i) for i in range(10)]
SEED_COVERAGE = 20260808
SEEDS_RMSE = list(range(1, 11))
SEED_BLOWFLY = 7


def report(criterion, passed, detail):
    line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(f"\n{line}")
    assert passed, line


@pytest.fixture(scope="module")
def bimodal_data():
    model = lookup("ode-bimodal")
    s = ODE_SETUP
    times = np.linspace(*s["span"], s["n_obs"])
    data, traj, _ = simulate_observations(
        model, s["theta"], 0.0, s["x0"], times, s["sigma"], SEED_DATA_BIMODAL)
    return model, data, traj


def test_criterion_1_bimodal_mode_recovery(bimodal_data):
    t0 = time.perf_counter()
    result, post, traj = ode_study(seed_data=SEED_DATA_BIMODAL,
                                   seed_smc=SEED_SMC_BIMODAL)
    wall = time.perf_counter() - t0
    pop = result.population
    W = pop.weights
    theta = np.array([s.theta for s in pop.states])
    w_pos = float(W[theta[:, 0] > 0].sum())
    w_neg = float(W[theta[:, 0] < 0].sum())
    abs_t1 = float(W @ np.abs(theta[:, 0]))
    t2 = float(W @ theta[:, 1])
    x0_cover = []
    for i, true_x0 in ((0, 7.0), (1, -10.0)):
        vals = np.array([s.c[i][0] for s in pop.states])
        lo, hi = weighted_quantile(vals, [0.025, 0.975], W)
        x0_cover.append(lo <= true_x0 <= hi)
    passed = (
        min(w_pos, w_neg) >= 0.10
        and 1.6 <= abs_t1 <= 2.4
        and 0.85 <= t2 <= 1.15
        and all(x0_cover)
        and wall < 1800.0
    )
    report(1, passed,
           f"sign weights {w_pos:.2f}/{w_neg:.2f}, |theta1| {abs_t1:.3f}, "
           f"theta2 {t2:.3f}, x0 covered {x0_cover}, wall {wall:.0f}s, "
           f"R={result.diagnostics['n_iterations']}")


def test_criterion_2_mcmc_single_mode_contrast(bimodal_data):
    model, data, _ = bimodal_data
    single = 0
    acc_rates = []
    for seed in SEEDS_MCMC_CONTRAST:
        post = build_posterior(model, data, ODE_SETUP["n_interior"])
        trace, stats = mcmc_spline(post, 400_000, seed=seed, thin=400)
        kept = trace["theta1"][len(trace["theta1"]) // 4:]
        frac_pos = np.mean(kept > 0)
        if min(frac_pos, 1 - frac_pos) < 0.02:
            single += 1
        acc_rates.append(stats.rate("theta"))
    acc_ok = all(0.10 <= r <= 0.40 for r in acc_rates)
    passed = single >= 8 and acc_ok
    report(2, passed,
           f"{single}/10 chains on a single sign mode after 400k iterations; "
           f"theta acceptance {min(acc_rates):.1%}..{max(acc_rates):.1%}")


def test_criterion_3_monk_dde():
    truth = {"mu_m": 0.03, "mu_p": 0.03, "p0": 100.0, "tau": 25.0,
             "sigma_1": 1.0, "sigma_2": 5.0}
    joint_covered = 0
    tau_means = []
    for seed_data, seed_smc in SEEDS_MONK:
        _, _, rep, _ = monk_study(seed_data, seed_smc)
        ok = all(rep.intervals[k][0] <= v <= rep.intervals[k][1]
                 for k, v in truth.items())
        joint_covered += int(ok)
        tau_means.append(rep.means["tau"])
    tau_mean = float(np.mean(tau_means))
    passed = joint_covered >= 7 and 20.0 <= tau_mean <= 30.0
    report(3, passed,
           f"joint coverage {joint_covered}/10, replicate-averaged posterior "
           f"mean tau {tau_mean:.2f} (per replicate: "
           + " ".join(f"{t:.1f}" for t in tau_means) + ")")


def test_criterion_4_hutchinson_coverage():
    out = coverage_study(20, master_seed=SEED_COVERAGE)
    cov = out["coverage"]
    passed = all(cov[k] >= 0.75 for k in ("nu", "P", "tau", "sigma_1"))
    detail = ", ".join(f"{k} {100 * cov[k]:.0f}%" for k in cov)
    avg = {k: tuple(round(float(x), 3) for x in v)
           for k, v in out["avg_ci"].items()}
    report(4, passed, f"coverage over 20 replicates: {detail}; avg CIs {avg}")


def test_criterion_5_hutchinson_rmse_trend():
    table = rmse_trend_study(SEEDS_RMSE, n_obs_levels=(101, 201, 401),
                             n_particles=200)
    decreasing = int(np.sum((table[:, 0] > table[:, 1])
                            & (table[:, 1] > table[:, 2])))
    rmse_201 = float(np.mean(table[:, 1]))
    passed = decreasing >= 8 and rmse_201 <= 0.35
    report(5, passed,
           f"strictly decreasing in {decreasing}/10 seeds; "
           f"mean RMSE at J=201: {rmse_201:.3f} "
           f"(columns J=101/201/401 means: "
           + "/".join(f"{v:.3f}" for v in table.mean(axis=0)) + ")")


def test_criterion_6_blowfly_real_data():
    result, post, rep = blowfly_study(seed_smc=SEED_BLOWFLY)
    tau_mean = rep.means["tau"]
    corr = rep.correlations["corr(nu,P)"]
    r_iters = result.diagnostics["n_iterations"]
    passed = (5.5 <= tau_mean <= 10.0 and 0.3 <= corr <= 0.8
              and 100 <= r_iters <= 500)
    report(6, passed,
           f"posterior mean tau {tau_mean:.2f}, corr(nu,P) {corr:.3f}, "
           f"R={r_iters}")


def test_criterion_7_kernel_speed(bimodal_data):
    model, data, _ = bimodal_data
    post = build_posterior(model, data, ODE_SETUP["n_interior"])
    n_spline = 400
    t0 = time.perf_counter()
    mcmc_spline(post, n_spline, seed=1, thin=n_spline)
    spline_per = (time.perf_counter() - t0) / n_spline

    spec = SolverPosteriorSpec(theta_mean=np.array([5.0, 5.0]),
                               method="euler")  # span/6000 default step
    n_solver = 30
    t0 = time.perf_counter()
    mcmc_desolve(model, data, spec, n_solver, seed=1, thin=n_solver)
    solver_per = (time.perf_counter() - t0) / n_solver
    ratio = spline_per / solver_per
    passed = ratio <= 0.2
    report(7, passed,
           f"per-sweep wall: spline {1e3 * spline_per:.2f} ms vs solver "
           f"{1e3 * solver_per:.1f} ms (ratio {ratio:.3f}, need <= 0.2)")


def test_criterion_8_property_battery(toy_flat_posterior):
    rng = np.random.default_rng(808)
    checks = []

    # B-spline partition of unity and derivative consistency
    kv = build_knots(0.0, 60.0, 14, 3)
    ts = rng.uniform(0, 60, 1000)
    B = basis_matrix(kv, ts)
    checks.append(("partition of unity",
                   np.max(np.abs(B.sum(axis=1) - 1.0)) <= 1e-12))
    c = rng.normal(size=kv.n_basis)
    h = 1e-5
    t_in = rng.uniform(1, 59, 50)
    fd = (basis_matrix(kv, t_in + h) @ c - basis_matrix(kv, t_in - h) @ c) / (2 * h)
    an = deriv_matrix(kv, t_in) @ c
    rel = np.max(np.abs(an - fd) / np.maximum(np.abs(fd), 1.0))
    checks.append(("derivative central-difference", rel <= 1e-6))

    # Simpson cubic exactness on knot subintervals
    kv2 = build_knots(0.0, 4.0, 5, 3)
    grid = build_grid(kv2, 0.0, m=3)
    f = (grid.nodes - 1.0) ** 3 + grid.nodes
    exact = ((4 - 1.0) ** 4 - 1.0) / 4.0 + 8.0
    checks.append(("Simpson cubic exactness",
                   abs(grid.weights @ f - exact) <= 1e-12 * abs(exact)))

    # rCESS hand cases and monotonicity in the exponent step
    w2 = np.array([0.5, 0.5])
    checks.append(("rCESS hand case",
                   abs(rcess(w2, np.array([0.0, math.log(3.0)]), 1.0) - 0.8)
                   <= 1e-12))
    u = rng.normal(size=50) * 4
    w50 = np.full(50, 0.02)
    vals = [rcess(w50, u, d) for d in np.linspace(0.01, 1, 30)]
    checks.append(("rCESS monotone", all(a >= b - 1e-12
                                         for a, b in zip(vals, vals[1:]))))

    # bisection hits the threshold within 1e-9
    a = next_alpha(w2, np.array([0.0, math.log(9.0)]), 0.0, 0.8)
    checks.append(("bisection tolerance",
                   abs(a - 0.5) <= 1e-9
                   and abs(rcess(w2, np.array([0.0, math.log(9.0)]), a) - 0.8)
                   <= 1e-9))

    # systematic resampler: exact integer counts and unbiased offspring
    counts_ok = True
    for seed in range(10):
        idx = systematic_resample(np.array([0.5, 0.5, 0.0, 0.0]),
                                  np.random.default_rng(seed))
        counts_ok &= np.array_equal(np.bincount(idx, minlength=4), [2, 2, 0, 0])
    checks.append(("resampler integer counts", counts_ok))
    wts = np.array([0.4, 0.1, 0.2, 0.3])
    totals = np.zeros(4)
    n_draws = 100_000
    gen = np.random.default_rng(5)
    for _ in range(n_draws):
        totals += np.bincount(systematic_resample(wts, gen), minlength=4)
    checks.append(("resampler unbiased",
                   np.all(np.abs(totals / n_draws - 4 * wts)
                          <= 3 * 0.5 / math.sqrt(n_draws))))

    # Gibbs draws match the stated conditionals (moments within 3 SE)
    from desmc.kernels import gibbs_lambda, gibbs_sigma2
    from desmc.posterior import ParticleState

    post = toy_flat_posterior
    state = ParticleState(np.zeros(1), 0.0, [post.c_hat[0].copy()],
                          np.ones(1), 1.0)
    post.refresh(state)
    gen = np.random.default_rng(6)
    lam_draws = np.empty(100_000)
    shape = post.priors.a_lambda + post.pen_dim_half
    rate = post.priors.b_lambda + 1.0
    for j in range(lam_draws.size):
        state.fid = np.array([2.0])
        gibbs_lambda(state, 1.0, post, gen)
        lam_draws[j] = state.lam
    se = math.sqrt(shape / rate**2 / lam_draws.size)
    checks.append(("Gibbs gamma moments",
                   abs(lam_draws.mean() - shape / rate) <= 3 * se))
    prec_draws = np.empty(100_000)
    ig_shape = post.priors.g0 + post.data.counts[0] / 2.0
    ig_rate = post.priors.h0 + 1.5
    for j in range(prec_draws.size):
        state.resid2 = np.array([3.0])
        gibbs_sigma2(state, 1.0, post, gen)
        prec_draws[j] = 1.0 / state.sigma2[0]
    se = math.sqrt(ig_shape / ig_rate**2 / prec_draws.size)
    checks.append(("Gibbs inverse-gamma moments",
                   abs(prec_draws.mean() - ig_shape / ig_rate) <= 3 * se))

    # MH stationarity on a discretised slice (chi-square, p > 0.01)
    from desmc.kernels import SweepStats, mh_c

    alpha = 0.6
    state = ParticleState(np.zeros(1), 0.0,
                          [post.c_hat[0] + 0.2 * rng.standard_normal(6)],
                          np.ones(1), 1.5)
    post.refresh(state)
    step = np.zeros(6)
    step[2] = 0.5
    cfg = KernelConfig(step_c=[step])
    gen = np.random.default_rng(7)
    stats_ = SweepStats()
    samples = np.empty(3000)
    for it in range(60_000):
        mh_c(state, alpha, post, gen, cfg, stats_)
        if (it + 1) % 20 == 0:
            samples[(it + 1) // 20 - 1] = state.c[0][2]
    xs = np.linspace(samples.min() - 1, samples.max() + 1, 400)
    logd = np.empty(xs.size)
    for j, cv in enumerate(xs):
        sj = state.copy()
        sj.c = [state.c[0].copy()]
        sj.c[0][2] = cv
        post.refresh(sj)
        logd[j] = post.log_target(sj, alpha)
    dens = np.exp(logd - logd.max())
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1])
                                           * np.diff(xs))])
    cdf /= cdf[-1]
    edges = np.interp(np.linspace(0, 1, 13), cdf, xs)
    edges[0], edges[-1] = -np.inf, np.inf
    obs_counts, _ = np.histogram(samples, bins=edges)
    stat = np.sum((obs_counts - samples.size / 12) ** 2 / (samples.size / 12))
    p_chi2 = sps.chi2(df=11).sf(stat)
    checks.append(("MH slice stationarity chi2 p>0.01", p_chi2 > 0.01))

    # SMC consistency trend on the toy conjugate target
    from test_smc import ToyGaussianTarget

    target = ToyGaussianTarget()

    def mean_err(k):
        errs = []
        for seed in range(200, 210):
            res = run_annealed_smc(target, k, 0.85, 0.5, seed=seed)
            W = res.population.weights
            xs_ = np.array([s[0] for s in res.population.states])
            errs.append(abs(W @ xs_ - target.post_mean))
        return float(np.mean(errs))

    checks.append(("SMC consistency trend",
                   mean_err(4000) < 0.5 * mean_err(250)))

    # determinism under a fixed seed, independent of worker count
    runs = [run_annealed_smc(ToyGaussianTarget(), 50, 0.9, 0.5, seed=3,
                             n_workers=wk) for wk in (1, 2)]
    same = (runs[0].schedule.alphas == runs[1].schedule.alphas
            and np.array_equal(runs[0].population.weights,
                               runs[1].population.weights))
    checks.append(("determinism / worker independence", same))

    failed = [name for name, ok in checks if not ok]
    report(8, not failed,
           f"{len(checks) - len(failed)}/{len(checks)} property checks passed"
           + (f"; failed: {failed}" if failed else ""))
