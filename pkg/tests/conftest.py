import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20210608)


def make_gp_data(rng, n, d, theta=None, noise=0.1):
    """Draw a small regression problem from a Matern 5/2 GP prior."""
    from gpbo.gp import Dataset
    from gpbo.kernels import HyperParams, KernelFamily, KernelSpec, kernel_matrix

    spec = KernelSpec(KernelFamily.MATERN52, ard=True, d=d)
    if theta is None:
        theta = HyperParams.create(np.full(d, 0.5), 1.0, noise)
    X = rng.random((n, d))
    K = kernel_matrix(spec, theta, X)
    L = np.linalg.cholesky(K + 1e-10 * np.eye(n))
    f = L @ rng.standard_normal(n)
    y = f + theta.noise * rng.standard_normal(n)
    return spec, theta, Dataset.standardize(X, y)
