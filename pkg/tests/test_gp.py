import math

import numpy as np
import pytest

from conftest import make_gp_data
from gpbo.gp import (
    Dataset,
    NotPositiveDefiniteError,
    _factorize,
    fit,
    lml_gradient,
    lml_value_and_gradient,
    log_marginal_likelihood,
    predict,
)
from gpbo.kernels import HyperParams, KernelFamily, KernelSpec, kernel_matrix

M52 = KernelFamily.MATERN52


def raw_dataset(X, y, d):
    """Dataset holding y verbatim (no standardisation)."""
    X = np.asarray(X, dtype=float).reshape(-1, d)
    y = np.asarray(y, dtype=float).reshape(-1)
    return Dataset(X, y, 0.0, 1.0, np.zeros(d), np.ones(d))


class TestDataset:
    def test_standardized_moments(self, rng):
        y = rng.random(10) * 7 + 3
        data = Dataset.standardize(rng.random((10, 2)), y)
        assert abs(float(np.mean(data.y))) < 1e-8
        assert abs(float(np.std(data.y)) - 1.0) < 1e-8
        np.testing.assert_allclose(data.y_raw(), y, rtol=1e-12)

    def test_constant_response_guard(self, rng):
        data = Dataset.standardize(rng.random((4, 1)), np.full(4, 3.3))
        assert data.y_std == 1.0
        np.testing.assert_allclose(data.y, 0.0)

    def test_size_validation(self, rng):
        with pytest.raises(ValueError):
            Dataset.standardize(rng.random((3, 2)), np.zeros(2))


class TestFit:
    def test_unit_scalar_problem(self):
        # kernel diagonal sf^2 = 0.64 plus noise 0.36 gives unit total variance
        theta = HyperParams.create(1.0, 0.8, 0.6)
        spec = KernelSpec(M52, ard=False, d=1)
        data = raw_dataset([[0.5]], [0.7], 1)
        gp = fit(spec, theta, data)
        np.testing.assert_allclose(gp.chol, [[1.0]], rtol=1e-15)
        np.testing.assert_allclose(gp.alpha, [0.7], rtol=1e-15)

    def test_duplicate_points_need_jitter(self, rng):
        X = np.vstack([rng.random((1, 2))] * 2 + [rng.random((4, 2))])
        theta = HyperParams.create(0.5, 1.0, 0.0)
        spec = KernelSpec(M52, ard=False, d=2)
        gp = fit(spec, theta, Dataset.standardize(X, rng.random(6)))
        assert gp.jitter > 0.0

    def test_cholesky_reconstruction(self, rng):
        spec, theta, data = make_gp_data(rng, 16, 3)
        gp = fit(spec, theta, data)
        A = kernel_matrix(spec, theta, data.X) + (
            theta.noise**2 + gp.jitter
        ) * np.eye(16)
        err = np.linalg.norm(gp.chol @ gp.chol.T - A) / np.linalg.norm(A)
        assert err < 1e-8

    def test_jitter_events_counted(self, rng):
        from gpbo.gp import jitter_event_count

        X = np.vstack([rng.random((1, 2))] * 2 + [rng.random((3, 2))])
        theta = HyperParams.create(0.5, 1.0, 0.0)
        spec = KernelSpec(M52, ard=False, d=2)
        before = jitter_event_count()
        fit(spec, theta, Dataset.standardize(X, rng.random(5)))
        assert jitter_event_count() == before + 1

    def test_non_pd_after_ladder_raises(self):
        A = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues -1, 3
        with pytest.raises(NotPositiveDefiniteError) as excinfo:
            _factorize(A)
        assert len(excinfo.value.attempted_jitters) == 4
        assert excinfo.value.attempted_jitters[0] == 0.0


class TestLogMarginalLikelihood:
    def test_zero_observation_unit_variance(self):
        theta = HyperParams.create(1.0, 0.8, 0.6)
        spec = KernelSpec(M52, ard=False, d=1)
        value = log_marginal_likelihood(spec, theta, raw_dataset([[0.2]], [0.0], 1))
        assert value == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-9)
        assert value == pytest.approx(-0.918939, abs=1e-6)

    def test_unit_observation(self):
        theta = HyperParams.create(1.0, 0.8, 0.6)
        spec = KernelSpec(M52, ard=False, d=1)
        value = log_marginal_likelihood(spec, theta, raw_dataset([[0.2]], [1.0], 1))
        assert value == pytest.approx(-1.418939, abs=1e-6)

    def test_matches_dense_inverse(self, rng):
        spec, theta, data = make_gp_data(rng, 8, 2)
        A = kernel_matrix(spec, theta, data.X) + theta.noise**2 * np.eye(8)
        dense = (
            -0.5 * data.y @ np.linalg.inv(A) @ data.y
            - 0.5 * math.log(np.linalg.det(A))
            - 0.5 * 8 * math.log(2 * math.pi)
        )
        assert log_marginal_likelihood(spec, theta, data) == pytest.approx(
            dense, abs=1e-9
        )

    def test_terms_finite_when_fit_succeeds(self, rng):
        spec, theta, data = make_gp_data(rng, 10, 2)
        gp = fit(spec, theta, data)
        assert all(math.isfinite(t) for t in gp.lml_terms())


class TestLmlGradient:
    def test_zero_targets_leave_only_complexity_term(self, rng):
        spec = KernelSpec(M52, ard=True, d=2)
        theta = HyperParams.create([0.5, 0.8], 1.2, 0.3)
        X = rng.random((6, 2))
        data = raw_dataset(X, np.zeros(6), 2)
        grad = lml_gradient(spec, theta, data)
        # finite differences of the complexity + constant terms only
        vec = theta.to_vector()
        for j in range(len(vec)):
            h = 1e-6 * max(vec[j], 1e-3)
            vp, vm = vec.copy(), vec.copy()
            vp[j] += h
            vm[j] -= h

            def logdet_term(v):
                th = HyperParams.from_vector(v)
                A = kernel_matrix(spec, th, X) + th.noise**2 * np.eye(6)
                return -0.5 * math.log(np.linalg.det(A))

            fd = (logdet_term(vp) - logdet_term(vm)) / (2 * h)
            assert grad[j] == pytest.approx(fd, rel=1e-5, abs=1e-10)

    def test_matches_finite_differences(self, rng):
        spec, theta, data = make_gp_data(rng, 12, 3)
        value, grad = lml_value_and_gradient(spec, theta, data)
        vec = theta.to_vector()
        for j in range(len(vec)):
            h = 1e-6 * vec[j]
            vp, vm = vec.copy(), vec.copy()
            vp[j] += h
            vm[j] -= h
            fd = (
                log_marginal_likelihood(spec, HyperParams.from_vector(vp), data)
                - log_marginal_likelihood(spec, HyperParams.from_vector(vm), data)
            ) / (2 * h)
            assert abs(grad[j] - fd) / max(abs(fd), 1e-12) < 1e-5

    def test_zero_noise_gradient_vanishes(self, rng):
        spec = KernelSpec(M52, ard=False, d=2)
        theta = HyperParams.create(0.6, 1.0, 0.0)
        data = Dataset.standardize(rng.random((5, 2)), rng.random(5))
        grad = lml_gradient(spec, theta, data)
        assert grad[-1] == 0.0


class TestPredict:
    def test_noiseless_interpolation(self, rng):
        spec = KernelSpec(M52, ard=True, d=2)
        theta = HyperParams.create([0.5, 0.7], 1.0, 1e-12)
        data = Dataset.standardize(rng.random((9, 2)), rng.random(9))
        gp = fit(spec, theta, data)
        mu, var = predict(gp, data.X)
        np.testing.assert_allclose(mu, data.y, atol=1e-6)
        assert np.all(var <= 1e-6)

    def test_reverts_to_prior_far_away(self):
        spec = KernelSpec(M52, ard=False, d=2)
        theta = HyperParams.create(0.05, 1.3, 0.1)
        data = raw_dataset(np.full((4, 2), 0.5), [1.0, -1.0, 0.5, 0.2], 2)
        mu, var = predict(fit(spec, theta, data), np.array([40.0, 40.0]))
        assert abs(mu) < 1e-10
        assert var == pytest.approx(theta.outputscale**2, rel=1e-10)

    def test_single_training_point_closed_form(self, rng):
        spec = KernelSpec(M52, ard=False, d=1)
        theta = HyperParams.create(0.7, 1.1, 0.4)
        data = raw_dataset([[0.3]], [0.9], 1)
        gp = fit(spec, theta, data)
        xstar = np.array([0.55])
        from gpbo.kernels import kernel_value

        k = kernel_value(spec, theta, xstar, np.array([0.3]))
        expected = k * 0.9 / (theta.outputscale**2 + theta.noise**2)
        mu, _ = predict(gp, xstar)
        assert mu == pytest.approx(expected, rel=1e-12)

    def test_variance_bounded_by_prior(self, rng):
        spec, theta, data = make_gp_data(rng, 10, 2)
        gp = fit(spec, theta, data)
        _, var = predict(gp, rng.random((50, 2)))
        assert np.all(var <= theta.outputscale**2 + 1e-10)
        assert np.all(var >= 0.0)

    def test_more_data_never_increases_variance(self, rng):
        spec = KernelSpec(M52, ard=False, d=2)
        theta = HyperParams.create(0.5, 1.0, 0.0)
        X = rng.random((8, 2))
        y = rng.random(8)
        probes = rng.random((20, 2))
        small = fit(spec, theta, raw_dataset(X[:5], y[:5], 2))
        large = fit(spec, theta, raw_dataset(X, y, 2))
        _, v_small = predict(small, probes)
        _, v_large = predict(large, probes)
        assert np.all(v_large <= v_small + 1e-8)
