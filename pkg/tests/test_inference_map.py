import numpy as np
import pytest

from conftest import make_gp_data
from gpbo.inference import (
    Provenance,
    map_as_samples,
    map_estimate,
    maximize_density,
)
from gpbo.kernels import HyperParams, KernelFamily, KernelSpec
from gpbo.priors import PriorSpec, UnconstrainedPosterior


class TestMaximizeDensity:
    def test_concave_quadratic_recovers_argmax(self):
        target = np.array([0.7, -1.3, 0.2])
        A = np.diag([2.0, 0.5, 1.0])

        def quad(z):
            d = z - target
            return -0.5 * float(d @ A @ d), -A @ d

        z, value = maximize_density(quad, np.zeros(3))
        np.testing.assert_allclose(z, target, atol=1e-6)
        assert value == pytest.approx(0.0, abs=1e-10)

    def test_all_infinite_reports_failure(self):
        def bad(z):
            return -np.inf, np.zeros_like(z)

        _, value = maximize_density(bad, np.zeros(2))
        assert value == -np.inf


class TestMapEstimate:
    def test_achieves_best_restart(self, rng):
        # data drawn from a GP with lengthscale 1, outputscale 1, noise 0.1
        theta_true = HyperParams.create([1.0, 1.0], 1.0, 0.1)
        _, _, data = make_gp_data(rng, 64, 2, theta=theta_true)
        spec_iso = KernelSpec(KernelFamily.MATERN52, ard=False, d=2)

        seed = 42
        theta, achieved = map_estimate(
            spec_iso, PriorSpec(), data, restarts=8, rng=np.random.default_rng(seed)
        )
        # replay the same starts one by one
        post = UnconstrainedPosterior(
            spec_iso, PriorSpec(), data, include_jacobian=False
        )
        replay_rng = np.random.default_rng(seed)
        starts = [post.prior_mode_z()]
        starts += [post.sample_prior_z(replay_rng) for _ in range(7)]
        per_start = [maximize_density(post.value_and_grad, z0)[1] for z0 in starts]
        assert achieved >= max(per_start) - 1e-9

    def test_returned_theta_is_valid_and_consistent(self, rng):
        spec, _, data = make_gp_data(rng, 12, 2)
        theta, achieved = map_estimate(
            spec, PriorSpec(), data, restarts=4, rng=np.random.default_rng(1)
        )
        assert all(ell > 0 for ell in theta.lengthscales)
        assert theta.outputscale > 0
        post = UnconstrainedPosterior(spec, PriorSpec(), data, include_jacobian=False)
        value, _ = post.value_and_grad(post.z_from_theta(theta))
        assert value == pytest.approx(achieved, rel=1e-12)

    def test_seed_determinism(self, rng):
        spec, _, data = make_gp_data(rng, 10, 2)
        a = map_estimate(spec, PriorSpec(), data, 5, np.random.default_rng(3))
        b = map_estimate(spec, PriorSpec(), data, 5, np.random.default_rng(3))
        assert a[0] == b[0]
        assert a[1] == b[1]

    def test_restart_validation(self, rng):
        spec, _, data = make_gp_data(rng, 5, 2)
        with pytest.raises(ValueError):
            map_estimate(spec, PriorSpec(), data, restarts=0)


class TestMapAsSamples:
    def test_singleton(self):
        theta = HyperParams.create(0.5, 1.0, 0.1)
        samples = map_as_samples(theta, 1)
        assert samples.m == 1
        assert samples.provenance is Provenance.MAP_DELTA

    def test_many_identical_copies(self):
        theta = HyperParams.create(0.5, 1.0, 0.1)
        samples = map_as_samples(theta, 256)
        assert samples.m == 256
        assert all(s == theta for s in samples)

    def test_count_validation(self):
        with pytest.raises(ValueError):
            map_as_samples(HyperParams.create(0.5, 1.0, 0.1), 0)
