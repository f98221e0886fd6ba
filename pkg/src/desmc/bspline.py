"""Clamped B-spline bases: construction, evaluation, derivatives, least squares.

Everything here is plain Cox-de Boor machinery on a clamped (open) knot
vector.  Bases are immutable after construction and cheap to evaluate in
bulk; the rest of the package only ever touches them through the matrix
builders below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KnotVector",
    "SplineBasis",
    "build_knots",
    "basis_eval",
    "basis_deriv",
    "basis_matrix",
    "deriv_matrix",
    "design_matrix",
    "ls_fit",
]


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Clamped knot vector on [t1, tmax] with equally weighted interior knots.

    The full knot sequence repeats each boundary ``degree + 1`` times, so the
    spline interpolates its first/last coefficient at the span endpoints.
    ``n_basis`` equals ``len(interior) + degree + 1``.
    """

    t1: float
    tmax: float
    interior: np.ndarray
    degree: int = 3
    knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.t1) and np.isfinite(self.tmax)):
            raise ValueError("span endpoints must be finite")
        if not self.tmax > self.t1:
            raise ValueError(f"reversed or empty span ({self.t1}, {self.tmax})")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        interior = np.asarray(self.interior, dtype=float)
        if interior.ndim != 1:
            raise ValueError("interior knots must be a 1-d sequence")
        if interior.size:
            if not np.all(np.diff(interior) > 0):
                raise ValueError("interior knots must be strictly increasing")
            if interior[0] <= self.t1 or interior[-1] >= self.tmax:
                raise ValueError("interior knots must lie strictly inside the span")
        object.__setattr__(self, "interior", interior)
        full = np.concatenate(
            [
                np.full(self.degree + 1, self.t1),
                interior,
                np.full(self.degree + 1, self.tmax),
            ]
        )
        object.__setattr__(self, "knots", full)

    @property
    def n_basis(self) -> int:
        return self.interior.size + self.degree + 1

    @property
    def span(self) -> tuple[float, float]:
        return (self.t1, self.tmax)


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """Per-component basis: a knot vector tagged with its DE component index."""

    kv: KnotVector
    component: int = 0

    @property
    def n_basis(self) -> int:
        return self.kv.n_basis


def build_knots(t1, tmax, n_interior, degree=3) -> KnotVector:
    """Equally spaced clamped knot vector with ``n_interior`` interior knots."""
    if n_interior < 0:
        raise ValueError("n_interior must be >= 0")
    if not (np.isfinite(t1) and np.isfinite(tmax)):
        raise ValueError("span endpoints must be finite")
    if not tmax > t1:
        raise ValueError(f"reversed or empty span ({t1}, {tmax})")
    interior = np.linspace(t1, tmax, n_interior + 2)[1:-1]
    return KnotVector(t1=float(t1), tmax=float(tmax), interior=interior, degree=degree)


def _check_domain(kv: KnotVector, times: np.ndarray):
    if times.size and (times.min() < kv.t1 or times.max() > kv.tmax):
        raise ValueError(
            f"evaluation time outside span [{kv.t1}, {kv.tmax}]"
        )


def _find_spans(kv: KnotVector, times: np.ndarray) -> np.ndarray:
    # knot interval index per point; t == tmax maps into the last interval
    # (half-open intervals everywhere else, closed on the right end).
    kt = kv.knots
    p = kv.degree
    spans = np.searchsorted(kt, times, side="right") - 1
    return np.clip(spans, p, kv.n_basis - 1)


def _nonzero_values(kv: KnotVector, times: np.ndarray, spans: np.ndarray):
    """Cox-de Boor triangle: the degree+1 nonzero basis values per point."""
    p = kv.degree
    kt = kv.knots
    n = times.shape[0]
    left = np.empty((n, p + 1))
    right = np.empty((n, p + 1))
    vals = np.zeros((n, p + 1))
    vals[:, 0] = 1.0
    for j in range(1, p + 1):
        left[:, j] = times - kt[spans + 1 - j]
        right[:, j] = kt[spans + j] - times
        saved = np.zeros(n)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = np.where(denom > 0.0, vals[:, r] / np.where(denom > 0, denom, 1.0), 0.0)
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved
    return vals


def basis_matrix(kv: KnotVector, times) -> np.ndarray:
    """Matrix of basis values, one row per time, one column per basis function."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    _check_domain(kv, times)
    p = kv.degree
    spans = _find_spans(kv, times)
    vals = _nonzero_values(kv, times, spans)
    out = np.zeros((times.shape[0], kv.n_basis))
    cols = spans[:, None] - p + np.arange(p + 1)[None, :]
    np.put_along_axis(out, cols, vals, axis=1)
    return out


def deriv_matrix(kv: KnotVector, times) -> np.ndarray:
    """First-derivative analogue of :func:`basis_matrix`.

    Uses the standard recurrence phi'_{l,p} = p * (phi_{l,p-1}/(kt[l+p]-kt[l])
    - phi_{l+1,p-1}/(kt[l+p+1]-kt[l+1])); terms with zero knot gaps vanish.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    _check_domain(kv, times)
    p = kv.degree
    kt = kv.knots
    spans = _find_spans(kv, times)
    if p == 1:
        # degree-0 pieces: indicator of the active interval
        lower_vals = np.ones((times.shape[0], 1))
    else:
        # same spans are valid for degree p-1 on the same full knot sequence
        lower_vals = _nonzero_low(kt, p, times, spans)
    n = times.shape[0]
    out = np.zeros((n, kv.n_basis))
    # nonzero derivative entries sit at columns spans-p .. spans
    for r in range(p + 1):
        l = spans - p + r  # global basis index
        gap1 = kt[l + p] - kt[l]
        gap2 = kt[l + p + 1] - kt[l + 1]
        term = np.zeros(n)
        if r > 0:
            term += np.where(gap1 > 0, lower_vals[:, r - 1] / np.where(gap1 > 0, gap1, 1.0), 0.0)
        if r < p:
            term -= np.where(gap2 > 0, lower_vals[:, r] / np.where(gap2 > 0, gap2, 1.0), 0.0)
        out[np.arange(n), l] = p * term
    return out


def _nonzero_low(kt, p, times, spans):
    """Nonzero degree-(p-1) basis values at the degree-p spans.

    Returns the p values phi_{spans-p+1,p-1} .. phi_{spans,p-1}.
    """
    n = times.shape[0]
    left = np.empty((n, p))
    right = np.empty((n, p))
    vals = np.zeros((n, p))
    vals[:, 0] = 1.0
    for j in range(1, p):
        left[:, j] = times - kt[spans + 1 - j]
        right[:, j] = kt[spans + j] - times
        saved = np.zeros(n)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = np.where(denom > 0.0, vals[:, r] / np.where(denom > 0, denom, 1.0), 0.0)
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved
    return vals


def basis_eval(kv: KnotVector, t: float) -> np.ndarray:
    """Basis values at one time point (length ``n_basis``, at most degree+1 nonzero)."""
    return basis_matrix(kv, [t])[0]


def basis_deriv(kv: KnotVector, t: float) -> np.ndarray:
    """First derivatives of all basis functions at one time point."""
    return deriv_matrix(kv, [t])[0]


def design_matrix(kv: KnotVector, times) -> np.ndarray:
    """Stacked basis rows at the observation times (J x L)."""
    return basis_matrix(kv, times)


def ls_fit(kv: KnotVector, times, y) -> np.ndarray:
    """Least-squares spline coefficients for data ``y`` at ``times``.

    Solved through the normal equations; a 1e-10 ridge jitter is applied when
    the Gram matrix is numerically singular (sparse or degenerate designs), so
    a usable minimum-norm-like solution is always returned.
    """
    B = basis_matrix(kv, times)
    y = np.asarray(y, dtype=float)
    gram = B.T @ B
    rhs = B.T @ y
    try:
        c = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        c = None
    if c is None or not np.all(np.isfinite(c)):
        jitter = 1e-10 * max(np.trace(gram) / kv.n_basis, 1.0)
        c = np.linalg.solve(gram + jitter * np.eye(kv.n_basis), rhs)
    return c
