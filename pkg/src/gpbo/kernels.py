"""Stationary covariance functions with analytic hyperparameter gradients.

Two families are provided, each in isotropic and ARD (one length-scale per
input dimension) variants:

* squared exponential: ``k(x, x') = sf^2 * exp(-u)``
* Matern 5/2: ``k(x, x') = sf^2 * (1 + sqrt(5) r + 5/3 r^2) * exp(-sqrt(5) r)``

where ``u = r^2 = sum_i (x_i - x'_i)^2 / ell_i^2`` is the squared scaled
distance. Gradient stacks are ordered (length-scales..., output-scale);
the observation noise does not enter the kernel and is handled by the GP
layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _core


class KernelFamily(Enum):
    SQUARED_EXPONENTIAL = "se"
    MATERN52 = "matern52"


@dataclass(frozen=True)
class KernelSpec:
    """Covariance family, ARD flag and input dimension."""

    family: KernelFamily
    ard: bool
    d: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"input dimension must be >= 1, got {self.d}")

    @property
    def n_lengthscales(self) -> int:
        return self.d if self.ard else 1

    @property
    def n_hyperparams(self) -> int:
        """Length-scales, output-scale and noise scale."""
        return self.n_lengthscales + 2


@dataclass(frozen=True)
class HyperParams:
    """Kernel hyperparameters plus the observation noise scale.

    ``lengthscales`` holds one entry per ARD dimension (or a single entry
    for isotropic kernels); all length-scales and the output-scale must be
    strictly positive, the noise scale non-negative.
    """

    lengthscales: tuple[float, ...]
    outputscale: float
    noise: float

    def __post_init__(self) -> None:
        if len(self.lengthscales) == 0:
            raise ValueError("at least one length-scale is required")
        if any(not ell > 0.0 for ell in self.lengthscales):
            raise ValueError(f"length-scales must be positive, got {self.lengthscales}")
        if not self.outputscale > 0.0:
            raise ValueError(f"output-scale must be positive, got {self.outputscale}")
        if self.noise < 0.0:
            raise ValueError(f"noise scale must be non-negative, got {self.noise}")

    @classmethod
    def create(
        cls,
        lengthscales: float | tuple[float, ...] | list[float] | np.ndarray,
        outputscale: float,
        noise: float,
    ) -> "HyperParams":
        if np.isscalar(lengthscales):
            ells = (float(lengthscales),)
        else:
            ells = tuple(float(v) for v in np.atleast_1d(lengthscales))
        return cls(ells, float(outputscale), float(noise))

    def to_vector(self) -> np.ndarray:
        """Flat (lengthscales..., outputscale, noise) vector."""
        return np.array([*self.lengthscales, self.outputscale, self.noise])

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "HyperParams":
        vec = np.asarray(vec, dtype=float)
        return cls(tuple(vec[:-2]), float(vec[-2]), float(vec[-1]))


def _check_consistent(spec: KernelSpec, theta: HyperParams) -> None:
    if len(theta.lengthscales) != spec.n_lengthscales:
        raise ValueError(
            f"expected {spec.n_lengthscales} length-scale(s) for "
            f"{'ARD' if spec.ard else 'isotropic'} d={spec.d}, "
            f"got {len(theta.lengthscales)}"
        )


def _expanded_ell(spec: KernelSpec, theta: HyperParams) -> np.ndarray:
    """Per-dimension length-scales (isotropic value broadcast over d)."""
    if spec.ard:
        return np.asarray(theta.lengthscales, dtype=float)
    return np.full(spec.d, theta.lengthscales[0])


def _as_matrix(X: np.ndarray, d: int) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.shape[0] == d else X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != d:
        raise ValueError(f"locations must have shape (n, {d}), got {X.shape}")
    return X


def kernel_value(
    spec: KernelSpec, theta: HyperParams, x: np.ndarray, xp: np.ndarray
) -> float:
    """Covariance between two locations."""
    _check_consistent(spec, theta)
    x = _as_matrix(np.atleast_1d(np.asarray(x, dtype=float)), spec.d)
    xp = _as_matrix(np.atleast_1d(np.asarray(xp, dtype=float)), spec.d)
    return float(kernel_cross(spec, theta, x, xp)[0, 0])


def kernel_matrix(spec: KernelSpec, theta: HyperParams, X: np.ndarray) -> np.ndarray:
    """Symmetric covariance matrix of a set of locations."""
    _check_consistent(spec, theta)
    X = _as_matrix(X, spec.d)
    ell = _expanded_ell(spec, theta)
    sf2 = theta.outputscale**2
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        return _core.se_matrix(X, ell, sf2)
    return _core.matern52_matrix(X, ell, sf2)


def kernel_cross(
    spec: KernelSpec, theta: HyperParams, X: np.ndarray, Z: np.ndarray
) -> np.ndarray:
    """Cross-covariance matrix between two sets of locations, shape (n, m)."""
    _check_consistent(spec, theta)
    X = _as_matrix(X, spec.d)
    Z = _as_matrix(Z, spec.d)
    ell = _expanded_ell(spec, theta)
    sf2 = theta.outputscale**2
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        return _core.se_cross(X, Z, ell, sf2)
    return _core.matern52_cross(X, Z, ell, sf2)


def kernel_matrix_with_gradients(
    spec: KernelSpec, theta: HyperParams, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Covariance matrix and its gradient stack in one pass.

    Returns ``(K, G)`` where ``G[j]`` is the elementwise partial derivative
    of K with respect to the j-th kernel hyperparameter, ordered as
    (length-scales..., output-scale). Noise is excluded: K does not depend
    on it.
    """
    _check_consistent(spec, theta)
    X = _as_matrix(X, spec.d)
    ell = _expanded_ell(spec, theta)
    sf2 = theta.outputscale**2
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        return _core.se_matrix_with_gradients(X, ell, sf2, spec.ard)
    return _core.matern52_matrix_with_gradients(X, ell, sf2, spec.ard)


def kernel_gradients(
    spec: KernelSpec, theta: HyperParams, X: np.ndarray
) -> np.ndarray:
    """Stack of dK/dtheta_j matrices (length-scales..., output-scale)."""
    return kernel_matrix_with_gradients(spec, theta, X)[1]
