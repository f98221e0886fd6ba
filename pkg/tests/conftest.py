"""Shared fixtures: small synthetic problems reused across test modules."""

import numpy as np
import pytest

from desmc.bspline import SplineBasis, build_knots
from desmc.models import DeModel, lookup
from desmc.posterior import ObservationSet, PriorSpec, SplinePosterior
from desmc.solver import sample_at, solve


@pytest.fixture(scope="session")
def ode_small():
    """ode-basic data at reduced size: 41 observations, small basis."""
    model = lookup("ode-basic")
    theta = np.array([2.0, 1.0])
    traj = solve(model, [7.0, -10.0], theta, h=60 / 8000, span=(0, 60))
    times = np.linspace(0, 60, 41)
    truth = sample_at(traj, times)
    rng = np.random.default_rng(314)
    data = ObservationSet(
        times=(times, times),
        values=(truth[:, 0] + rng.normal(0, 1.0, 41),
                truth[:, 1] + rng.normal(0, 3.0, 41)),
        span=(0.0, 60.0),
        noise=("gaussian", "gaussian"),
    )
    post = SplinePosterior(
        model,
        [SplineBasis(build_knots(0, 60, 8, 3), i) for i in range(2)],
        data,
        PriorSpec(theta_mean=np.array([5.0, 5.0])),
    )
    return {"model": model, "data": data, "post": post, "truth": truth,
            "times": times, "traj": traj}


def make_zero_rhs_toy(n_obs=5, n_interior=2, seed=5, alpha_half_life=None):
    """One-component model with dx/dt = 0: fidelity is quadratic in c.

    The joint over (theta, c, sigma2, lambda) is then a linear-Gaussian
    hierarchy whose one-dimensional marginals can be computed by quadrature,
    which makes it the reference problem for kernel-invariance tests.
    """
    model = DeModel(
        name="toy-flat",
        n_components=1,
        n_params=1,
        observed=(0,),
        has_delay=False,
        rhs=lambda x, xl, th: np.zeros_like(x),
        noise=("gaussian",),
        param_names=("drift",),
    )
    kv = build_knots(0.0, 1.0, n_interior, 3)
    bases = [SplineBasis(kv, 0)]
    rng = np.random.default_rng(seed)
    times = np.linspace(0, 1, n_obs)
    values = 1.0 + 0.3 * rng.standard_normal(n_obs)
    data = ObservationSet(times=(times,), values=(values,), span=(0.0, 1.0),
                          noise=("gaussian",))
    priors = PriorSpec(theta_mean=np.zeros(1), sigma_theta=2.0,
                       g0=3.0, h0=1.0, a_lambda=2.0, b_lambda=1.0, sigma_c=3.0)
    post = SplinePosterior(model, bases, data, priors)
    return post


@pytest.fixture(scope="session")
def toy_flat_posterior():
    return make_zero_rhs_toy()
