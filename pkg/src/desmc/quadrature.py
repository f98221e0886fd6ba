"""Composite Simpson quadrature for the DE-fidelity penalty integrals.

The penalty for component i integrates the squared mismatch between the
spline derivative and the model right-hand side over [t1 + tau, tmax].
Subinterval boundaries are the spline's interior knots that survive the
delayed lower limit; each subinterval carries an odd number M of Simpson
nodes.  Grids are immutable, and because they depend on tau they are
rebuilt whenever tau changes (delay models) and cached by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import KnotVector, basis_matrix, deriv_matrix

__all__ = ["QuadratureGrid", "FidelityGrid", "build_grid", "build_fidelity_grid",
           "penalty_component", "total_penalty", "fidelity_vector"]


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Simpson nodes/weights on knot-delimited subintervals of [t1+tau, tmax]."""

    boundaries: np.ndarray  # (n_sub + 1,)
    nodes: np.ndarray       # (n_sub * M,) flattened, ordered
    weights: np.ndarray     # same shape as nodes, positive
    tau: float
    nodes_per_sub: int


def _simpson_weights(a: float, b: float, m: int) -> np.ndarray:
    # composite Simpson on m points (m odd): h/3 * (1, 4, 2, 4, ..., 4, 1)
    h = (b - a) / (m - 1)
    w = np.full(m, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def build_grid(kv: KnotVector, tau: float, m: int = 3) -> QuadratureGrid:
    """Quadrature grid for the fidelity integral of one spline component."""
    if m < 3 or m % 2 == 0:
        raise ValueError("M must be odd and >= 3 for Simpson panels")
    if not 0.0 <= tau < kv.tmax - kv.t1:
        raise ValueError(
            f"delay {tau} leaves an empty integration domain on span {kv.span}"
        )
    lower = kv.t1 + tau
    inner = kv.interior[kv.interior > lower]
    boundaries = np.concatenate([[lower], inner, [kv.tmax]])
    nodes = np.empty((boundaries.size - 1) * m)
    weights = np.empty_like(nodes)
    for k in range(boundaries.size - 1):
        a, b = boundaries[k], boundaries[k + 1]
        nodes[k * m : (k + 1) * m] = np.linspace(a, b, m)
        weights[k * m : (k + 1) * m] = _simpson_weights(a, b, m)
    return QuadratureGrid(boundaries, nodes, weights, float(tau), m)


def _same_kv(a: KnotVector, b: KnotVector) -> bool:
    return (
        a.degree == b.degree
        and a.t1 == b.t1
        and a.tmax == b.tmax
        and a.interior.shape == b.interior.shape
        and bool(np.all(a.interior == b.interior))
    )


class FidelityGrid:
    """Quadrature grid plus the basis matrices needed to evaluate penalties.

    Holds, for every component i, the derivative matrix of basis i at its own
    nodes and the value matrices of every basis at those nodes and at the
    lagged nodes (node - tau, inside the span by construction).  When all
    components share one knot vector (the usual case) a single set of
    matrices is stored and penalty evaluation collapses to three matmuls.
    """

    def __init__(self, bases, tau: float, m: int = 3):
        self.tau = float(tau)
        self.m = m
        self.bases = tuple(bases)
        kv0 = bases[0].kv
        self.shared = all(_same_kv(b.kv, kv0) for b in bases)
        self.grids = [build_grid(b.kv, tau, m) for b in bases]
        if self.shared:
            nodes = self.grids[0].nodes
            lag_nodes = np.maximum(nodes - tau, kv0.t1)
            self.values = basis_matrix(kv0, nodes)       # (Q, L)
            self.lagged = basis_matrix(kv0, lag_nodes)   # (Q, L)
            self.deriv = deriv_matrix(kv0, nodes)        # (Q, L)
            self.weights = self.grids[0].weights
        else:
            self.deriv = [deriv_matrix(b.kv, self.grids[i].nodes)
                          for i, b in enumerate(bases)]
            self.values = [
                [basis_matrix(bb.kv, self.grids[i].nodes) for bb in bases]
                for i in range(len(bases))
            ]
            self.lagged = [
                [basis_matrix(bb.kv, np.maximum(self.grids[i].nodes - tau, bb.kv.t1))
                 for bb in bases]
                for i in range(len(bases))
            ]


def build_fidelity_grid(bases, tau: float, m: int = 3) -> FidelityGrid:
    return FidelityGrid(bases, tau, m)


def fidelity_vector(grid: FidelityGrid, model, coeffs, theta) -> np.ndarray:
    """All component penalties R_1..R_I; entries are +inf on non-finite rhs."""
    if grid.shared:
        C = np.stack(coeffs)                      # (I, L)
        x = grid.values @ C.T                     # (Q, I)
        xlag = grid.lagged @ C.T if model.has_delay else x
        with np.errstate(all="ignore"):
            rhs = model.rhs(x, xlag, theta)       # (Q, I)
            resid = grid.deriv @ C.T - rhs
            out = grid.weights @ np.square(resid)
        out[~np.isfinite(out)] = np.inf
        return out
    return np.array(
        [penalty_component(grid, model, coeffs, theta, i)
         for i in range(model.n_components)]
    )


def penalty_component(grid: FidelityGrid, model, coeffs, theta, i: int) -> float:
    """Integrated squared DE residual for component i (nonnegative).

    Returns +inf when the right-hand side is non-finite at some node (poles,
    overflow); callers treat that as a -inf log density.
    """
    if grid.shared:
        return float(fidelity_vector(grid, model, coeffs, theta)[i])
    vals = grid.values[i]
    lags = grid.lagged[i]
    x = np.column_stack([mat @ c for mat, c in zip(vals, coeffs)])
    xlag = (np.column_stack([mat @ c for mat, c in zip(lags, coeffs)])
            if model.has_delay else x)
    with np.errstate(all="ignore"):
        rhs = model.rhs(x, xlag, theta)[..., i]
        resid = grid.deriv[i] @ coeffs[i] - rhs
        val = float(grid.grids[i].weights @ np.square(resid))
    return val if np.isfinite(val) else np.inf


def total_penalty(grid: FidelityGrid, model, coeffs, theta) -> float:
    return float(np.sum(fidelity_vector(grid, model, coeffs, theta)))
