import math

import numpy as np
import pytest

from conftest import make_gp_data
from gpbo.gp import log_marginal_likelihood
from gpbo.inference import map_estimate, maximize_density
from gpbo.kernels import HyperParams
from gpbo.priors import (
    NOISE_FREE_SIGMA,
    GammaPrior,
    PriorSpec,
    UnconstrainedPosterior,
    gamma_log_pdf,
    log_posterior_unconstrained,
    log_prior,
)


class TestGammaLogPdf:
    def test_exponential_special_case(self):
        assert gamma_log_pdf(1.0, 1.0, 2.0) == pytest.approx(-2.0, rel=1e-14)

    def test_mode(self):
        prior = GammaPrior(3.0, 6.0)
        assert prior.mode() == pytest.approx(1.0 / 3.0)
        assert prior.dlog_pdf(prior.mode()) == pytest.approx(0.0, abs=1e-12)

    def test_value_at_mode(self):
        expected = 3 * math.log(6) - math.lgamma(3) + 2 * math.log(1 / 3) - 2
        assert gamma_log_pdf(3.0, 6.0, 1.0 / 3.0) == pytest.approx(expected, rel=1e-12)
        assert gamma_log_pdf(3.0, 6.0, 1.0 / 3.0) == pytest.approx(0.48490, abs=1e-5)

    def test_nonpositive_support(self):
        assert gamma_log_pdf(2.0, 1.0, 0.0) == -math.inf
        assert gamma_log_pdf(2.0, 1.0, -1.0) == -math.inf

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            gamma_log_pdf(0.0, 1.0, 1.0)


class TestLogPrior:
    def test_isotropic_three_summands(self):
        priors = PriorSpec()
        theta = HyperParams.create(0.5, 1.2, 0.1)
        expected = (
            priors.lengthscale.log_pdf(0.5)
            + priors.outputscale.log_pdf(1.2)
            + priors.noise.log_pdf(0.1)
        )
        assert log_prior(priors, theta) == pytest.approx(expected, rel=1e-14)

    def test_ard_seven_summands(self):
        priors = PriorSpec()
        ells = [0.2, 0.4, 0.6, 0.8, 1.0]
        theta = HyperParams.create(ells, 1.2, 0.1)
        expected = sum(priors.lengthscale.log_pdf(e) for e in ells)
        expected += priors.outputscale.log_pdf(1.2) + priors.noise.log_pdf(0.1)
        assert log_prior(priors, theta) == pytest.approx(expected, rel=1e-14)

    def test_value_at_prior_modes(self):
        priors = PriorSpec()
        theta = HyperParams.create(1 / 3, (2 - 1) / 0.15, (1.1 - 1) / 0.05)
        expected = (
            priors.lengthscale.log_pdf(1 / 3)
            + priors.outputscale.log_pdf((2 - 1) / 0.15)
            + priors.noise.log_pdf((1.1 - 1) / 0.05)
        )
        assert log_prior(priors, theta) == pytest.approx(expected, rel=1e-14)


class TestUnconstrainedPosterior:
    def test_zero_jacobian_at_unit_params(self, rng):
        spec, _, data = make_gp_data(rng, 6, 2)
        priors = PriorSpec()
        post = UnconstrainedPosterior(spec, priors, data)
        z = np.zeros(post.dim)
        value, _ = post.value_and_grad(z)
        theta = post.theta_from_z(z)
        assert theta.lengthscales == (1.0, 1.0)
        expected = log_marginal_likelihood(spec, theta, data) + log_prior(
            priors, theta
        )
        assert value == pytest.approx(expected, rel=1e-14)

    def test_gradient_matches_finite_differences(self, rng):
        spec, _, data = make_gp_data(rng, 8, 3)
        post = UnconstrainedPosterior(spec, PriorSpec(), data)
        z = rng.standard_normal(post.dim) * 0.4
        _, grad = post.value_and_grad(z)
        for j in range(post.dim):
            zp, zm = z.copy(), z.copy()
            zp[j] += 1e-6
            zm[j] -= 1e-6
            fd = (post.value_and_grad(zp)[0] - post.value_and_grad(zm)[0]) / 2e-6
            assert abs(grad[j] - fd) / max(abs(fd), 1e-12) < 1e-5

    def test_fixed_noise_drops_a_coordinate(self, rng):
        spec, _, data = make_gp_data(rng, 6, 3)
        post = UnconstrainedPosterior(spec, PriorSpec(), data, NOISE_FREE_SIGMA)
        assert post.dim == spec.n_lengthscales + 1
        value, grad = post.value_and_grad(np.zeros(post.dim))
        assert grad.shape == (post.dim,)
        assert post.theta_from_z(np.zeros(post.dim)).noise == NOISE_FREE_SIGMA

    def test_transform_round_trip(self, rng):
        spec, _, data = make_gp_data(rng, 5, 2)
        post = UnconstrainedPosterior(spec, PriorSpec(), data)
        theta = HyperParams.create([0.3, 2.5], 1.7, 0.05)
        z = post.z_from_theta(theta)
        back = post.theta_from_z(z)
        np.testing.assert_allclose(back.to_vector(), theta.to_vector(), rtol=1e-15)

    def test_density_invariance_constrained_vs_unconstrained(self, rng):
        spec, _, data = make_gp_data(rng, 7, 2)
        priors = PriorSpec()
        post = UnconstrainedPosterior(spec, priors, data)
        z = rng.standard_normal(post.dim) * 0.3
        theta = post.theta_from_z(z)
        direct, _ = post.value_and_grad(z)
        via_theta = (
            log_marginal_likelihood(spec, theta, data)
            + log_prior(priors, theta)
            + float(np.sum(z))
        )
        assert direct == pytest.approx(via_theta, abs=1e-12)

    def test_module_level_wrapper(self, rng):
        spec, _, data = make_gp_data(rng, 5, 2)
        z = np.zeros(4)
        v1, g1 = log_posterior_unconstrained(spec, PriorSpec(), data, z)
        post = UnconstrainedPosterior(spec, PriorSpec(), data)
        v2, g2 = post.value_and_grad(z)
        assert v1 == v2
        np.testing.assert_array_equal(g1, g2)

    def test_nonfinite_z_rejected_gracefully(self, rng):
        spec, _, data = make_gp_data(rng, 5, 2)
        post = UnconstrainedPosterior(spec, PriorSpec(), data)
        value, grad = post.value_and_grad(np.full(post.dim, np.nan))
        assert value == -math.inf
        np.testing.assert_array_equal(grad, np.zeros(post.dim))

    def test_flat_priors_map_equals_ml(self, rng):
        spec, _, data = make_gp_data(rng, 14, 2)
        theta_map, value_map = map_estimate(
            spec, None, data, restarts=6, rng=np.random.default_rng(0)
        )
        # independent ML maximisation of the marginal likelihood itself
        post = UnconstrainedPosterior(spec, None, data, include_jacobian=False)
        best = -math.inf
        ml_rng = np.random.default_rng(1)
        for _ in range(6):
            _, value = maximize_density(
                post.value_and_grad, ml_rng.standard_normal(post.dim)
            )
            best = max(best, value)
        assert value_map == pytest.approx(best, rel=1e-6)
        assert log_marginal_likelihood(spec, theta_map, data) == pytest.approx(
            value_map, rel=1e-12
        )
