"""Multi-start MAP estimation of GP hyperparameters."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize

from ..gp import Dataset
from ..kernels import HyperParams, KernelSpec
from ..priors import PriorSpec, UnconstrainedPosterior
from .samples import InferenceError

# Objective value substituted for -inf so L-BFGS-B line searches stay finite.
_BAD_VALUE = 1e25


def maximize_density(
    f, z0: np.ndarray, maxiter: int = 200
) -> tuple[np.ndarray, float]:
    """One quasi-Newton ascent of a (value, gradient) callable.

    Returns the terminal point and its achieved value (-inf if every
    evaluation had zero probability).
    """

    def negated(z: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = f(z)
        if not math.isfinite(value):
            return _BAD_VALUE, np.zeros_like(z)
        return -value, -grad

    result = minimize(
        negated, z0, jac=True, method="L-BFGS-B",
        options={"maxiter": maxiter, "ftol": 1e-12, "gtol": 1e-8},
    )
    value = -float(result.fun)
    if value <= -_BAD_VALUE / 2:
        return z0, -math.inf
    return result.x, value


def map_estimate(
    spec: KernelSpec,
    priors: PriorSpec | None,
    data: Dataset,
    restarts: int = 10,
    rng: np.random.Generator | None = None,
    fixed_noise: float | None = None,
    maxiter: int = 200,
) -> tuple[HyperParams, float]:
    """MAP hyperparameters via multi-start L-BFGS-B in log space.

    Maximises the theta-space log posterior (log marginal likelihood plus
    log prior) re-parameterised through z = log(theta); no Jacobian term,
    so with flat priors (``priors=None``) this is the maximum-likelihood
    estimate. The first start is the vector of prior modes; the remaining
    ``restarts - 1`` are drawn from the priors. Returns the best terminal
    point in constrained space with its achieved log posterior.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if rng is None:
        rng = np.random.default_rng()
    posterior = UnconstrainedPosterior(
        spec, priors, data, fixed_noise, include_jacobian=False
    )

    starts = [posterior.prior_mode_z()]
    starts += [posterior.sample_prior_z(rng) for _ in range(restarts - 1)]

    best_z: np.ndarray | None = None
    best_value = -math.inf
    for z0 in starts:
        z, value = maximize_density(posterior.value_and_grad, z0, maxiter)
        if value > best_value:
            best_z, best_value = z, value

    if best_z is None or not math.isfinite(best_value):
        raise InferenceError(
            "all MAP restarts failed (log posterior -inf everywhere)",
            {"restarts": restarts},
        )
    return posterior.theta_from_z(best_z), best_value
