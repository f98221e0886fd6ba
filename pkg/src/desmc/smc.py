"""Adaptive annealed SMC: schedule search, weighting, resampling, propagation.

The engine is generic over a small target protocol (initial draw, per-unit
log increment, invariant sweep) so the spline posterior and the solver-based
baseline share one implementation.  Each iteration: pick the next annealing
exponent by bisecting the relative conditional ESS to the threshold, update
the log weights with the cached increments, propagate every particle with
one invariant sweep, then either stop (exponent reached one) or resample
when the relative ESS has degenerated.

Per-particle generator streams are spawned from the master seed, and every
cross-particle step happens at a serial barrier, so results are bitwise
reproducible and independent of the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import KernelConfig, SweepStats, sweep as kernel_sweep
from .posterior import ParticleState, SplinePosterior

__all__ = [
    "ParticlePopulation", "AnnealingSchedule", "SMCResult", "SplineTarget",
    "ess", "rcess", "next_alpha", "normalize_log_weights",
    "log_weight_update", "systematic_resample", "run_annealed_smc",
    "run_spline_smc",
]


class DegeneratePopulation(RuntimeError):
    pass


def ess(weights) -> float:
    """Effective sample size of normalized weights, 1 / sum(W^2)."""
    weights = np.asarray(weights)
    total = float(np.sum(np.square(weights)))
    if total <= 0.0 or not math.isfinite(total):
        raise DegeneratePopulation("all particle weights vanished")
    return 1.0 / total


def normalize_log_weights(log_w):
    """Normalized weights and the log normaliser, via log-sum-exp."""
    log_w = np.asarray(log_w, dtype=float)
    m = np.max(log_w)
    if not math.isfinite(m):
        raise DegeneratePopulation("no particle carries finite weight")
    w = np.exp(log_w - m)
    total = float(np.sum(w))
    return w / total, m + math.log(total)


def rcess(prev_weights, log_inc, delta_alpha) -> float:
    """Relative conditional ESS of the increment raised to ``delta_alpha``.

    Computed entirely in the log domain: increments at the reference can
    span hundreds of orders of magnitude, and particles carrying the current
    weight need not be the ones with the best increments.
    """
    if delta_alpha == 0.0:
        return 1.0
    w = np.asarray(prev_weights, dtype=float)
    u = np.asarray(log_inc, dtype=float)
    mask = (w > 0.0) & np.isfinite(u)
    if not np.any(mask):
        raise DegeneratePopulation("all weighted increments are -inf")
    # shift by the best weighted increment; the shift cancels in the ratio
    # and keeps every weighted multiplier in [0, 1]
    shift = float(np.max(u[mask]))
    wt = np.zeros_like(w)
    with np.errstate(invalid="ignore"):
        wt[mask] = np.exp(delta_alpha * (u[mask] - shift))
    num = float(np.dot(w, wt))
    den = float(np.dot(w, np.square(wt)))
    return min(num * num / den, 1.0)


def next_alpha(prev_weights, log_inc, alpha_prev, phi,
               tol=1e-12, max_iter=2000) -> float:
    """Smallest exponent step with rCESS equal to ``phi`` (or 1.0 at the end).

    f(alpha) = rCESS(alpha - alpha_prev) is continuous and decreasing on
    (alpha_prev, 1]; if even the full step keeps f >= phi the final exponent
    is returned directly, otherwise the unique crossing is bisected to
    |f - phi| <= tol.  Early iterations can need steps many orders of
    magnitude below one (the raw increments are enormous at the reference),
    so the interval-exhaustion check is relative, never absolute.
    """
    if not 0.0 < phi < 1.0:
        raise ValueError("rCESS threshold must be in (0, 1)")
    if rcess(prev_weights, log_inc, 1.0 - alpha_prev) >= phi:
        return 1.0
    lo, hi = alpha_prev, 1.0
    mid = hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = rcess(prev_weights, log_inc, mid - alpha_prev)
        if abs(val - phi) <= tol or hi - lo <= 1e-15 * hi:
            break
        if val > phi:
            lo = mid
        else:
            hi = mid
    if mid <= alpha_prev:  # float exhaustion; force progress
        mid = min(1.0, np.nextafter(alpha_prev, 1.0))
    return mid


def log_weight_update(log_w, log_inc, delta_alpha):
    """Accumulate delta_alpha times the increments into the log weights."""
    log_w = np.asarray(log_w, dtype=float)
    u = np.asarray(log_inc, dtype=float)
    with np.errstate(invalid="ignore"):
        step = delta_alpha * u
    step[np.isneginf(u)] = -math.inf
    return log_w + step


def systematic_resample(weights, rng) -> np.ndarray:
    """Offspring indices from one uniform draw against K equal strata."""
    weights = np.asarray(weights, dtype=float)
    k = weights.size
    points = (rng.random() + np.arange(k)) / k
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard the float tail
    return np.searchsorted(cum, points, side="left").clip(0, k - 1)


@dataclass
class ParticlePopulation:
    states: list
    log_w: np.ndarray
    weights: np.ndarray
    alpha: float
    iteration: int
    rngs: list = field(default_factory=list, repr=False)

    @property
    def size(self) -> int:
        return len(self.states)

    def rel_ess(self) -> float:
        return ess(self.weights) / self.size


@dataclass
class AnnealingSchedule:
    alphas: list = field(default_factory=list)
    rcess: list = field(default_factory=list)
    ress: list = field(default_factory=list)
    resampled: list = field(default_factory=list)
    accept: list = field(default_factory=list)   # dict per iteration

    def record(self, alpha, rc, re, rs, acc):
        self.alphas.append(alpha)
        self.rcess.append(rc)
        self.ress.append(re)
        self.resampled.append(rs)
        self.accept.append(acc)

    def __len__(self):
        return len(self.alphas)


@dataclass
class SMCResult:
    population: ParticlePopulation
    schedule: AnnealingSchedule
    diagnostics: dict


class SplineTarget:
    """Annealed-SMC adapter around the spline posterior and its kernels."""

    def __init__(self, post: SplinePosterior, cfg: KernelConfig | None = None,
                 max_init_tries=100):
        self.post = post
        self.cfg = cfg if cfg is not None else KernelConfig()
        if self.cfg.step_tau <= 0.0:
            span = post.data.span
            self.cfg.step_tau = 0.01 * (span[1] - span[0])
        self.max_init_tries = max_init_tries

    def initial_state(self, rng) -> ParticleState:
        post = self.post
        pri = post.priors
        model = post.model
        for _ in range(self.max_init_tries):
            theta = pri.theta_mean + pri.sigma_theta * rng.standard_normal(model.n_params)
            for d, bounds in enumerate(model.param_support):
                if bounds is None:
                    continue
                lo, hi = bounds
                for _ in range(1000):
                    if lo < theta[d] < hi:
                        break
                    theta[d] = (pri.theta_mean[d]
                                + pri.sigma_theta[d] * rng.standard_normal())
            tau = 0.0
            if model.has_delay:
                lo, hi = pri.tau_bounds
                tau = rng.uniform(max(lo, 0.0), hi)
            c = [chat + pri.sigma_c * rng.standard_normal(chat.size)
                 for chat in post.c_hat]
            sigma2 = 1.0 / rng.gamma(pri.g0, 1.0 / pri.h0, size=len(model.observed))
            lam = (self.cfg.fix_lambda if self.cfg.fix_lambda is not None
                   else rng.gamma(pri.a_lambda, 1.0 / pri.b_lambda))
            state = ParticleState(theta, tau, c, sigma2, lam)
            post.refresh(state)
            if math.isfinite(post.log_target(state, 0.0)):
                return state
        raise DegeneratePopulation("could not draw a finite initial particle")

    def log_increment(self, state) -> float:
        return self.post.log_increment(state)

    def sweep(self, state, alpha, rng) -> SweepStats:
        return kernel_sweep(state, alpha, self.post, rng, self.cfg)

    def clone(self, state):
        return state.copy()

    def prepare(self, states, weights, alpha):
        """Population-adaptive step sizes (off unless cfg.adapt is set)."""
        if not self.cfg.adapt:
            return
        model = self.post.model
        theta = np.array([s.theta for s in states])
        self.cfg.step_theta = 2.38 * _weighted_sd(theta, weights).clip(min=1e-8)
        if model.has_delay:
            taus = np.array([s.tau for s in states])
            self.cfg.step_tau = float(
                max(2.38 * _weighted_sd(taus[:, None], weights)[0], 1e-8))
        steps = []
        for i in range(model.n_components):
            ci = np.array([s.c[i] for s in states])
            # robust spread: a population straddling several modes must not
            # inflate the within-mode step size
            scale = _weighted_iqr_scale(ci, weights)
            steps.append((2.38 / math.sqrt(ci.shape[1]) * scale).clip(min=1e-8))
        self.cfg.step_c = steps


def _weighted_sd(x, w):
    mean = w @ x
    var = w @ np.square(x - mean)
    return np.sqrt(np.maximum(var, 0.0))


def _weighted_iqr_scale(x, w):
    """Per-column weighted interquartile range scaled to a Gaussian sd."""
    from .summary import weighted_quantile

    out = np.empty(x.shape[1])
    for j in range(x.shape[1]):
        lo, hi = weighted_quantile(x[:, j], [0.25, 0.75], w)
        out[j] = (hi - lo) / 1.349
    sd = _weighted_sd(x, w)
    return np.where(out > 0, out, sd)


def _map_ordered(fn, items, executor):
    if executor is None:
        return [fn(it) for it in items]
    return list(executor.map(fn, items))


def run_annealed_smc(target, n_particles, phi, resample_threshold, seed,
                     n_workers=1, bisection_tol=1e-12) -> SMCResult:
    """Run Algorithm-style adaptive annealed SMC to the posterior.

    Weighting happens before propagation (the increment depends only on the
    previous iteration's particles); resampling is skipped at the final
    iteration so the returned population stays weighted.
    """
    if n_particles < 2:
        raise ValueError("need at least two particles")
    if not 0.0 < resample_threshold < 1.0:
        raise ValueError("resampling threshold must be in (0, 1)")
    t_start = time.perf_counter()
    root = np.random.SeedSequence(seed)
    children = root.spawn(n_particles + 1)
    engine_rng = np.random.default_rng(children[0])
    rngs = [np.random.default_rng(c) for c in children[1:]]

    executor = ThreadPoolExecutor(n_workers) if n_workers > 1 else None
    try:
        states = _map_ordered(
            lambda kr: target.initial_state(kr), rngs, executor)
        log_w = np.zeros(n_particles)
        weights = np.full(n_particles, 1.0 / n_particles)
        alpha = 0.0
        schedule = AnnealingSchedule()
        r = 0
        while alpha < 1.0:
            r += 1
            incs = np.array(_map_ordered(target.log_increment, states, executor))
            alpha_new = next_alpha(weights, incs, alpha, phi, tol=bisection_tol)
            delta = alpha_new - alpha
            achieved = rcess(weights, incs, delta)
            log_w = log_weight_update(log_w, incs, delta)
            weights, _ = normalize_log_weights(log_w)

            target.prepare(states, weights, alpha_new)
            stats = _map_ordered(
                lambda sr: target.sweep(sr[0], alpha_new, sr[1]),
                list(zip(states, rngs)), executor)
            merged = SweepStats()
            for st in stats:
                merged.merge(st)
            acc = {k: merged.rate(k) for k in merged.proposed}

            alpha = alpha_new
            rel = ess(weights) / n_particles
            resampled = False
            if alpha < 1.0 and rel < resample_threshold:
                idx = systematic_resample(weights, engine_rng)
                states = [target.clone(states[i]) for i in idx]
                log_w = np.zeros(n_particles)
                weights = np.full(n_particles, 1.0 / n_particles)
                resampled = True
            schedule.record(alpha, achieved, rel, resampled, acc)
    finally:
        if executor is not None:
            executor.shutdown()

    population = ParticlePopulation(states, log_w, weights, alpha, r, rngs)
    diagnostics = {
        "seed": seed,
        "n_particles": n_particles,
        "phi": phi,
        "resample_threshold": resample_threshold,
        "n_iterations": r,
        "wall_time": time.perf_counter() - t_start,
    }
    return SMCResult(population, schedule, diagnostics)


def run_spline_smc(post: SplinePosterior, n_particles, phi=0.9,
                   resample_threshold=0.5, seed=0, cfg: KernelConfig | None = None,
                   n_workers=1) -> SMCResult:
    """Convenience wrapper: annealed SMC on a spline posterior."""
    target = SplineTarget(post, cfg)
    return run_annealed_smc(target, n_particles, phi, resample_threshold,
                            seed, n_workers=n_workers)
