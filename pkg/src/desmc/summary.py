"""Weighted posterior summaries: means, quantiles, bands, correlations, RMSE."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bspline import basis_matrix

__all__ = [
    "weighted_mean", "weighted_quantile", "weighted_corr",
    "trajectory_band", "rmse", "SummaryReport", "summarize",
]


def weighted_mean(values, weights=None):
    values = np.asarray(values, dtype=float)
    if weights is None:
        return float(np.mean(values))
    return float(np.dot(weights, values))


def weighted_quantile(values, q, weights=None):
    """Inverse weighted empirical CDF with linear interpolation.

    Sample k (sorted) sits at plotting position (cum_k - w_k) / (S - w_k),
    which collapses to numpy's default linear quantiles for equal weights.
    """
    values = np.asarray(values, dtype=float)
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if weights is None:
        out = np.quantile(values, q)
        return out if out.size > 1 else float(out[0])
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    if v.size == 1:
        out = np.full(q.size, v[0])
        return out if out.size > 1 else float(out[0])
    cum = np.cumsum(w)
    total = cum[-1]
    denom = total - w
    with np.errstate(invalid="ignore", divide="ignore"):
        pos = (cum - w) / np.where(denom > 0, denom, np.inf)
    pos[0] = 0.0
    pos[-1] = 1.0
    out = np.interp(q, pos, v)
    return out if out.size > 1 else float(out[0])


def weighted_corr(x, y, weights=None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if weights is None:
        weights = np.full(x.size, 1.0 / x.size)
    mx = np.dot(weights, x)
    my = np.dot(weights, y)
    cov = np.dot(weights, (x - mx) * (y - my))
    vx = np.dot(weights, np.square(x - mx))
    vy = np.dot(weights, np.square(y - my))
    if vx <= 0 or vy <= 0:
        return 0.0
    return float(cov / np.sqrt(vx * vy))


def trajectory_band(states, weights, basis, component, grid_times,
                    levels=(0.025, 0.975)):
    """Pointwise weighted mean curve and credible band for one component."""
    B = basis_matrix(basis.kv, grid_times)
    coeffs = np.array([s.c[component] for s in states])
    curves = coeffs @ B.T            # (K, n_grid)
    mean = weights @ curves
    lo = np.empty(mean.size)
    hi = np.empty(mean.size)
    for j in range(mean.size):
        lo[j], hi[j] = weighted_quantile(curves[:, j], levels, weights)
    return mean, lo, hi


def rmse(c_hat, basis, truth_values, times):
    """Root mean squared distance between the fitted spline and the truth."""
    pred = basis_matrix(basis.kv, times) @ np.asarray(c_hat, dtype=float)
    truth_values = np.asarray(truth_values, dtype=float)
    return float(np.sqrt(np.mean(np.square(pred - truth_values))))


@dataclass
class SummaryReport:
    means: dict
    intervals: dict                  # name -> (2.5%, 97.5%)
    correlations: dict = field(default_factory=dict)
    bands: dict = field(default_factory=dict)
    rmses: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "means": self.means,
            "intervals": {k: list(v) for k, v in self.intervals.items()},
            "correlations": self.correlations,
            "bands": {k: {kk: list(vv) for kk, vv in v.items()}
                      for k, v in self.bands.items()},
            "rmses": self.rmses,
            "metadata": self.metadata,
        }


def _parameter_columns(states, model):
    cols = {}
    theta = np.array([s.theta for s in states])
    for d, name in enumerate(model.param_names):
        cols[name] = theta[:, d]
    if model.has_delay:
        cols["tau"] = np.array([s.tau for s in states])
    sig = np.array([s.sigma2 for s in states])
    for k in range(sig.shape[1]):
        cols[f"sigma2_{k + 1}"] = sig[:, k]
        cols[f"sigma_{k + 1}"] = np.sqrt(sig[:, k])
    cols["lambda"] = np.array([s.lam for s in states])
    for i in range(model.n_components):
        cols[f"x{i + 1}_0"] = np.array([s.c[i][0] for s in states])
    return cols


def summarize(states, weights, model, bases=None, grid_times=None,
              truth=None, corr_pairs=(), metadata=None) -> SummaryReport:
    """Weighted posterior report for a particle population (or a trace).

    ``truth`` maps component index to values at the component's observation
    times ``(times, values)`` and triggers RMSE evaluation of the weighted
    mean coefficients.  ``corr_pairs`` are (name, name) tuples taken from the
    parameter columns.
    """
    if weights is None:
        weights = np.full(len(states), 1.0 / len(states))
    cols = _parameter_columns(states, model)
    means = {k: weighted_mean(v, weights) for k, v in cols.items()}
    intervals = {
        k: tuple(np.atleast_1d(weighted_quantile(v, [0.025, 0.975], weights)))
        for k, v in cols.items()
    }
    report = SummaryReport(means=means, intervals=intervals,
                           metadata=metadata or {})
    for a, b in corr_pairs:
        report.correlations[f"corr({a},{b})"] = weighted_corr(
            cols[a], cols[b], weights)
    if bases is not None and grid_times is not None:
        for i in range(model.n_components):
            mean, lo, hi = trajectory_band(states, weights, bases[i], i, grid_times)
            report.bands[f"x{i + 1}"] = {
                "times": grid_times, "mean": mean, "lower": lo, "upper": hi,
            }
    if truth is not None and bases is not None:
        for i, (times, values) in truth.items():
            c_mean = weights @ np.array([s.c[i] for s in states])
            report.rmses[f"x{i + 1}"] = rmse(c_mean, bases[i], values, times)
    return report
