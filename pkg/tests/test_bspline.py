"""B-spline basis tests: counts, partition of unity, derivatives, fitting."""

import numpy as np
import pytest
from scipy.interpolate import BSpline

from desmc.bspline import (
    KnotVector,
    basis_deriv,
    basis_eval,
    basis_matrix,
    build_knots,
    deriv_matrix,
    design_matrix,
    ls_fit,
)

rng = np.random.default_rng(20240817)


class TestConstruction:
    def test_basis_counts(self):
        assert build_knots(0, 1, 9, 3).n_basis == 13
        assert build_knots(0, 60, 14, 3).n_basis == 18
        assert build_knots(0, 7.5, 0, 3).n_basis == 4

    def test_full_knot_sequence_clamped(self):
        kv = build_knots(0, 1, 2, 3)
        np.testing.assert_allclose(
            kv.knots, [0, 0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1, 1]
        )
        assert np.all(np.diff(kv.knots) >= 0)

    def test_reversed_span_rejected(self):
        with pytest.raises(ValueError, match="span"):
            build_knots(1.0, 0.0, 3, 3)
        with pytest.raises(ValueError, match="finite"):
            build_knots(0.0, np.inf, 3, 3)

    def test_unsorted_interior_rejected(self):
        with pytest.raises(ValueError, match="increasing"):
            KnotVector(0.0, 1.0, np.array([0.6, 0.3]), 3)


class TestEvaluation:
    def test_partition_of_unity(self):
        kv = build_knots(0, 60, 14, 3)
        ts = rng.uniform(0, 60, size=1000)
        B = basis_matrix(kv, ts)
        np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(B >= 0)

    def test_endpoint_interpolation(self):
        kv = build_knots(0, 1, 9, 3)
        v = basis_eval(kv, 0.0)
        expected = np.zeros(13)
        expected[0] = 1.0
        np.testing.assert_allclose(v, expected, atol=1e-14)
        w = basis_eval(kv, 1.0)
        assert w[-1] == pytest.approx(1.0)

    def test_degree_one_hat_functions(self):
        # knots {0, 0, 0.5, 1, 1}: hand evaluation of the hats at t = 0.25
        kv = KnotVector(0.0, 1.0, np.array([0.5]), degree=1)
        np.testing.assert_allclose(basis_eval(kv, 0.25), [0.5, 0.5, 0.0])

    def test_local_support(self):
        kv = build_knots(0, 10, 12, 3)
        ts = rng.uniform(0, 10, size=500)
        B = basis_matrix(kv, ts)
        assert np.max(np.count_nonzero(B, axis=1)) <= kv.degree + 1

    def test_matches_scipy(self):
        kv = build_knots(0, 60, 14, 3)
        ts = np.linspace(0, 60, 301)
        ours = basis_matrix(kv, ts)
        theirs = BSpline.design_matrix(ts, kv.knots, kv.degree).toarray()
        np.testing.assert_allclose(ours, theirs, atol=1e-12)

    def test_out_of_span_raises(self):
        kv = build_knots(0, 1, 4, 3)
        with pytest.raises(ValueError, match="span"):
            basis_eval(kv, 1.2)
        with pytest.raises(ValueError, match="span"):
            design_matrix(kv, [0.1, -0.3])


class TestDerivatives:
    def test_derivative_sums_to_zero(self):
        kv = build_knots(0, 60, 14, 3)
        ts = rng.uniform(0, 60, size=400)
        D = deriv_matrix(kv, ts)
        np.testing.assert_allclose(D.sum(axis=1), 0.0, atol=1e-11)

    def test_linear_reproduction(self):
        # fit a + b*t exactly, then the fitted spline derivative must be b
        kv = build_knots(0, 5, 7, 3)
        ts = np.linspace(0, 5, 40)
        c = ls_fit(kv, ts, 2.0 + 3.0 * ts)
        for t in [0.0, 1.3, 2.71, 5.0]:
            assert basis_deriv(kv, t) @ c == pytest.approx(3.0, abs=1e-9)

    def test_central_difference_oracle(self):
        kv = build_knots(0, 1, 9, 3)
        c = rng.normal(size=kv.n_basis)
        h = 1e-5
        for t in rng.uniform(2 * h, 1 - 2 * h, size=25):
            fd = (basis_eval(kv, t + h) @ c - basis_eval(kv, t - h) @ c) / (2 * h)
            an = basis_deriv(kv, t) @ c
            assert an == pytest.approx(fd, rel=1e-6, abs=1e-6)

    def test_matches_scipy_derivative(self):
        kv = build_knots(0, 12, 9, 3)
        ts = np.linspace(0, 12, 97)
        D = deriv_matrix(kv, ts)
        for l in range(kv.n_basis):
            c = np.zeros(kv.n_basis)
            c[l] = 1.0
            ref = BSpline(kv.knots, c, kv.degree).derivative()(ts)
            np.testing.assert_allclose(D[:, l], ref, atol=1e-10)


class TestDesignAndFit:
    def test_single_time_row(self):
        kv = build_knots(0, 1, 3, 3)
        M = design_matrix(kv, [0.37])
        assert M.shape == (1, kv.n_basis)
        np.testing.assert_allclose(M[0], basis_eval(kv, 0.37))

    def test_row_sums_and_shape(self):
        kv = build_knots(0, 60, 14, 3)
        times = np.linspace(0, 60, 121)
        M = design_matrix(kv, times)
        assert M.shape == (121, 18)
        np.testing.assert_allclose(M.sum(axis=1), 1.0, atol=1e-12)

    def test_exact_recovery(self):
        kv = build_knots(0, 10, 11, 3)
        c_true = rng.normal(size=kv.n_basis)
        times = np.linspace(0, 10, 60)
        y = design_matrix(kv, times) @ c_true
        c = ls_fit(kv, times, y)
        np.testing.assert_allclose(c, c_true, atol=1e-8)

    def test_constant_reproduction(self):
        kv = build_knots(0, 4, 6, 3)
        times = np.linspace(0, 4, 30)
        c = ls_fit(kv, times, np.full(30, 5.0))
        checks = basis_matrix(kv, np.linspace(0, 4, 77)) @ c
        np.testing.assert_allclose(checks, 5.0, atol=1e-9)

    def test_cubic_reproduction(self):
        kv = build_knots(0, 2, 5, 3)
        times = np.linspace(0, 2, 40)
        y = 1.0 - times + 0.5 * times**2 - 2.0 * times**3
        c = ls_fit(kv, times, y)
        resid = design_matrix(kv, times) @ c - y
        assert np.max(np.abs(resid)) <= 1e-8

    def test_local_optimality_probe(self):
        kv = build_knots(0, 6, 8, 3)
        times = np.linspace(0, 6, 80)
        y = np.sin(times) + 0.1 * rng.normal(size=80)
        c = ls_fit(kv, times, y)
        B = design_matrix(kv, times)
        base = np.sum((y - B @ c) ** 2)
        for _ in range(100):
            delta = rng.normal(scale=0.01, size=kv.n_basis)
            assert np.sum((y - B @ (c + delta)) ** 2) >= base - 1e-12

    def test_rank_deficient_ridge_fallback(self):
        # fewer observations than basis functions: must still return finite c
        kv = build_knots(0, 1, 12, 3)
        times = np.array([0.1, 0.5, 0.9])
        y = np.array([1.0, 2.0, 3.0])
        c = ls_fit(kv, times, y)
        assert np.all(np.isfinite(c))
        fit = design_matrix(kv, times) @ c
        np.testing.assert_allclose(fit, y, atol=1e-3)
