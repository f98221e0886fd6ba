"""Fixed-step integrators for data generation and the solver-based baselines.

RK4 and forward Euler on a uniform grid; delayed systems are handled by the
method of steps, reading lagged values from the already-computed trajectory
with linear interpolation and a constant pre-history x(t) = x(0) for t < t1.
Never used inside the spline posterior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Trajectory", "SolverDivergence", "solve", "sample_at"]


class SolverDivergence(RuntimeError):
    """State became non-finite during integration."""

    def __init__(self, t):
        super().__init__(f"trajectory diverged near t = {t:.6g}")
        self.time = t


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray   # strictly increasing uniform grid
    states: np.ndarray  # (len(times), I)

    @property
    def span(self):
        return float(self.times[0]), float(self.times[-1])

    def sample_at(self, times) -> np.ndarray:
        return sample_at(self, times)


def solve(model, x0, theta, tau=0.0, h=None, span=(0.0, 1.0), method="rk4") -> Trajectory:
    """Integrate the model over ``span`` from ``x0`` with fixed step ``h``.

    For delayed systems the lagged state is linearly interpolated from the
    accumulated grid; queries before t1 return the initial state.  Sub-step
    delays (0 < tau < h) fall back to the newest available state, so pick
    h <= tau when the delay matters.
    """
    t1, tmax = float(span[0]), float(span[1])
    if h is None:
        h = (tmax - t1) / 10000.0
    if h <= 0:
        raise ValueError("step size must be positive")
    n_steps = max(1, int(round((tmax - t1) / h)))
    times = np.linspace(t1, tmax, n_steps + 1)
    h = times[1] - times[0]
    x0 = np.asarray(x0, dtype=float)
    states = np.empty((n_steps + 1, model.n_components))
    states[0] = x0
    delayed = model.has_delay and tau > 0.0

    def lag_value(t_query, k_done):
        # linear interpolation on the filled part of the grid
        if t_query <= t1:
            return x0
        pos = (t_query - t1) / h
        j = int(pos)
        if j >= k_done:
            return states[k_done]
        frac = pos - j
        return states[j] + frac * (states[j + 1] - states[j])

    rhs = model.rhs
    with np.errstate(all="ignore"):
        for k in range(n_steps):
            t = times[k]
            x = states[k]
            if method == "euler":
                lag = lag_value(t - tau, k) if delayed else x
                x_new = x + h * rhs(x, lag, theta)
            elif method == "rk4":
                if delayed:
                    lag0 = lag_value(t - tau, k)
                    lagh = lag_value(t + 0.5 * h - tau, k)
                    lag1 = lag_value(t + h - tau, k)
                    k1 = rhs(x, lag0, theta)
                    k2 = rhs(x + 0.5 * h * k1, lagh, theta)
                    k3 = rhs(x + 0.5 * h * k2, lagh, theta)
                    k4 = rhs(x + h * k3, lag1, theta)
                else:
                    k1 = rhs(x, x, theta)
                    x2 = x + 0.5 * h * k1
                    k2 = rhs(x2, x2, theta)
                    x3 = x + 0.5 * h * k2
                    k3 = rhs(x3, x3, theta)
                    x4 = x + h * k3
                    k4 = rhs(x4, x4, theta)
                x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                raise ValueError(f"unknown method {method!r}")
            if not np.all(np.isfinite(x_new)):
                raise SolverDivergence(times[k + 1])
            states[k + 1] = x_new
    return Trajectory(times, states)


def sample_at(traj: Trajectory, times) -> np.ndarray:
    """Linear interpolation of the trajectory at the requested times."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    t0, t1 = traj.span
    if times.size and (times.min() < t0 - 1e-12 or times.max() > t1 + 1e-12):
        raise ValueError("requested times extrapolate beyond the solved span")
    out = np.empty((times.size, traj.states.shape[1]))
    for j in range(traj.states.shape[1]):
        out[:, j] = np.interp(times, traj.times, traj.states[:, j])
    return out
