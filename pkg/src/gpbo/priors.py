"""Gamma hyperpriors and the unconstrained log posterior density.

Hyperparameters are kept positive by working in z = log(theta); the log
posterior in z-space is

    log p(z) = LML(exp z) + log p(exp z) + sum(z)

with the final term the log-Jacobian of the exp transform. All inference
backends (point estimation, HMC, VI) consume this density through
:class:`UnconstrainedPosterior`.

In the noise-free setting the observation noise is frozen at a small
constant and excluded from the parameter vector; its prior then does not
contribute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gp import Dataset, _lml_value_grad_raw
from .kernels import HyperParams, KernelSpec, _check_consistent

# Noise scale (standard deviation, standardized-output units) used when the
# objective is treated as noise-free.
NOISE_FREE_SIGMA = 1e-4

# z values beyond this bound are astronomically improbable under any of the
# priors below and risk exp overflow; treated as zero posterior mass.
_Z_BOUND = 40.0


@dataclass(frozen=True)
class ParamLayout:
    """Shape of the unconstrained parameter vector.

    z covers (log lengthscales..., log outputscale) plus a trailing
    log-noise coordinate unless the noise is frozen at ``fixed_noise``.
    """

    n_lengthscales: int
    fixed_noise: float | None = None

    @property
    def dim(self) -> int:
        return self.n_lengthscales + (1 if self.fixed_noise is not None else 2)

    def theta_from_z(self, z: np.ndarray) -> HyperParams:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"z must have shape ({self.dim},), got {z.shape}")
        p = self.n_lengthscales
        theta = np.exp(z)
        noise = self.fixed_noise if self.fixed_noise is not None else float(theta[p + 1])
        return HyperParams(tuple(theta[:p]), float(theta[p]), noise)

    def z_from_theta(self, theta: HyperParams) -> np.ndarray:
        vals = [*theta.lengthscales, theta.outputscale]
        if self.fixed_noise is None:
            vals.append(theta.noise)
        return np.log(np.asarray(vals, dtype=float))


def gamma_log_pdf(a: float, b: float, x: float) -> float:
    """Log density of Gamma(concentration a, rate b) at x (-inf for x <= 0)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"Gamma parameters must be positive, got a={a}, b={b}")
    if x <= 0.0:
        return -math.inf
    return a * math.log(b) - math.lgamma(a) + (a - 1.0) * math.log(x) - b * x


@dataclass(frozen=True)
class GammaPrior:
    """Gamma distribution in concentration/rate parameterisation."""

    concentration: float
    rate: float

    def __post_init__(self) -> None:
        if self.concentration <= 0.0 or self.rate <= 0.0:
            raise ValueError("Gamma concentration and rate must be positive")

    def log_pdf(self, x: float) -> float:
        return gamma_log_pdf(self.concentration, self.rate, x)

    def dlog_pdf(self, x: float) -> float:
        return (self.concentration - 1.0) / x - self.rate

    def mode(self) -> float:
        if self.concentration < 1.0:
            raise ValueError("mode undefined for concentration < 1")
        return (self.concentration - 1.0) / self.rate

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.gamma(self.concentration, 1.0 / self.rate))


@dataclass(frozen=True)
class PriorSpec:
    """Per-hyperparameter Gamma priors.

    Defaults are weakly informative for standardized outputs on the unit
    cube: lengthscale ~ Ga(3, 6), outputscale ~ Ga(2, 0.15) and noise
    ~ Ga(1.1, 0.05). Each ARD length-scale gets an independent copy of the
    length-scale prior.
    """

    lengthscale: GammaPrior = GammaPrior(3.0, 6.0)
    outputscale: GammaPrior = GammaPrior(2.0, 0.15)
    noise: GammaPrior = GammaPrior(1.1, 0.05)


def log_prior(
    priors: PriorSpec, theta: HyperParams, include_noise: bool = True
) -> float:
    """Sum of per-parameter Gamma log densities."""
    total = sum(priors.lengthscale.log_pdf(ell) for ell in theta.lengthscales)
    total += priors.outputscale.log_pdf(theta.outputscale)
    if include_noise:
        total += priors.noise.log_pdf(theta.noise)
    return total


class UnconstrainedPosterior:
    """Log posterior over z = log(hyperparameters) with analytic gradient.

    With ``fixed_noise`` set, z covers (lengthscales..., outputscale) and
    the noise scale is held constant (its prior is dropped); otherwise the
    noise is the final coordinate.

    ``include_jacobian`` selects between two densities: with the exp
    transform's log-Jacobian (the proper density of z, which samplers and
    VI must target) and without it (the theta-space log posterior merely
    re-parameterised, whose argmax is the MAP estimate). ``priors=None``
    means improper flat priors: the prior term vanishes and the MAP
    coincides with the maximum-likelihood estimate.
    """

    def __init__(
        self,
        spec: KernelSpec,
        priors: PriorSpec | None,
        data: Dataset,
        fixed_noise: float | None = None,
        include_jacobian: bool = True,
    ):
        self.spec = spec
        self.priors = priors
        self.data = data
        self.fixed_noise = fixed_noise
        self.include_jacobian = include_jacobian
        self._X = np.ascontiguousarray(data.X, dtype=float)
        self._y = np.asarray(data.y, dtype=float)
        self.n_lengthscales = spec.n_lengthscales
        self.layout = ParamLayout(self.n_lengthscales, fixed_noise)
        self.dim = self.layout.dim

    # -- parameter mapping -------------------------------------------------

    def theta_from_z(self, z: np.ndarray) -> HyperParams:
        return self.layout.theta_from_z(z)

    def z_from_theta(self, theta: HyperParams) -> np.ndarray:
        _check_consistent(self.spec, theta)
        return self.layout.z_from_theta(theta)

    def prior_mode_z(self) -> np.ndarray:
        if self.priors is None:
            return np.zeros(self.dim)
        p = self.n_lengthscales
        modes = [self.priors.lengthscale.mode()] * p + [self.priors.outputscale.mode()]
        if self.fixed_noise is None:
            modes.append(self.priors.noise.mode())
        return np.log(np.asarray(modes))

    def sample_prior_z(self, rng: np.random.Generator) -> np.ndarray:
        if self.priors is None:
            return rng.standard_normal(self.dim)
        p = self.n_lengthscales
        vals = [self.priors.lengthscale.sample(rng) for _ in range(p)]
        vals.append(self.priors.outputscale.sample(rng))
        if self.fixed_noise is None:
            vals.append(self.priors.noise.sample(rng))
        return np.log(np.asarray(vals))

    # -- density -----------------------------------------------------------

    def value_and_grad(self, z: np.ndarray) -> tuple[float, np.ndarray]:
        """Log posterior density at z and its gradient.

        Non-positive-definite covariances (and wildly out-of-range z) give
        (-inf, 0) so optimisers and samplers reject the point.
        """
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"z must have shape ({self.dim},), got {z.shape}")
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > _Z_BOUND:
            return -math.inf, np.zeros(self.dim)

        p = self.n_lengthscales
        theta = np.exp(z)
        ells = theta[:p]
        sf = float(theta[p])
        sn = self.fixed_noise if self.fixed_noise is not None else float(theta[p + 1])

        ell_full = ells if self.spec.ard else np.full(self.spec.d, ells[0])
        lml, lml_grad = _lml_value_grad_raw(
            self.spec.family, self.spec.ard, self._X, self._y, ell_full, sf, sn
        )
        if not math.isfinite(lml):
            return -math.inf, np.zeros(self.dim)

        prior_val = 0.0
        prior_grad = np.zeros(self.dim)
        if self.priors is not None:
            for i, ell in enumerate(ells):
                prior_val += self.priors.lengthscale.log_pdf(float(ell))
                prior_grad[i] = self.priors.lengthscale.dlog_pdf(float(ell))
            prior_val += self.priors.outputscale.log_pdf(sf)
            prior_grad[p] = self.priors.outputscale.dlog_pdf(sf)
            if self.fixed_noise is None:
                prior_val += self.priors.noise.log_pdf(sn)
                prior_grad[p + 1] = self.priors.noise.dlog_pdf(sn)

        value = lml + prior_val
        grad = theta * (lml_grad[: self.dim] + prior_grad)
        if self.include_jacobian:
            value += float(np.sum(z))
            grad += 1.0
        return value, grad

    def __call__(self, z: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value_and_grad(z)


def log_posterior_unconstrained(
    spec: KernelSpec,
    priors: PriorSpec,
    data: Dataset,
    z: np.ndarray,
    fixed_noise: float | None = None,
) -> tuple[float, np.ndarray]:
    """Unconstrained-space log posterior density and gradient at z."""
    return UnconstrainedPosterior(spec, priors, data, fixed_noise).value_and_grad(z)
