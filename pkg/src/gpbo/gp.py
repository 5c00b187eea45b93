"""Gaussian-process regression: fitting, marginal likelihood, prediction.

The GP has a zero mean function; observations enter standardized (zero
mean, unit variance) and inputs live in the unit hypercube. All linear
algebra goes through a single Cholesky factorisation of
``K + noise^2 I (+ jitter I)`` with an escalating jitter ladder for
numerically rank-deficient systems.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf, dpotri, dpotrs

from . import _core
from .kernels import (
    HyperParams,
    KernelFamily,
    KernelSpec,
    kernel_cross,
    kernel_matrix,
    kernel_matrix_with_gradients,
)

logger = logging.getLogger(__name__)

# Jitter ladder: fractions of the mean diagonal magnitude tried in order
# (an initial attempt without jitter comes first).
JITTER_FRACTIONS = (1e-8, 1e-6, 1e-4)

LOG_2PI = math.log(2.0 * math.pi)

# Process-wide count of factorisations that needed a non-zero jitter;
# inference backends report the delta across a run in their diagnostics.
_jitter_events = 0


def jitter_event_count() -> int:
    return _jitter_events


def _record_jitter_event() -> None:
    global _jitter_events
    _jitter_events += 1


class NotPositiveDefiniteError(Exception):
    """Cholesky failed at every jitter level."""

    def __init__(self, attempted_jitters: tuple[float, ...]):
        self.attempted_jitters = attempted_jitters
        super().__init__(
            "covariance matrix not positive definite; attempted jitters: "
            f"{attempted_jitters}"
        )


@dataclass(frozen=True)
class Dataset:
    """Evaluated locations and standardized observations.

    ``X`` is (n, d) in the unit cube, ``y`` is the standardized response.
    ``y_mean``/``y_std`` record the raw-unit output scaling and
    ``lower``/``upper`` the native input bounds, so raw quantities can be
    recovered.
    """

    X: np.ndarray
    y: np.ndarray
    y_mean: float
    y_std: float
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        if self.X.ndim != 2:
            raise ValueError("X must be 2-d (n, d)")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("y must be 1-d with one entry per row of X")
        if self.n < 1:
            raise ValueError("dataset must contain at least one observation")
        for arr in (self.X, self.y, self.lower, self.upper):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @classmethod
    def standardize(
        cls,
        X: np.ndarray,
        y_raw: np.ndarray,
        lower: np.ndarray | None = None,
        upper: np.ndarray | None = None,
    ) -> "Dataset":
        """Build a dataset with zero-mean unit-variance outputs.

        With a single observation (or a degenerate constant response) the
        standard deviation is pinned to 1 so the transform stays invertible.
        """
        X = np.ascontiguousarray(X, dtype=float)
        y_raw = np.asarray(y_raw, dtype=float).reshape(-1)
        d = X.shape[1]
        lower = np.zeros(d) if lower is None else np.asarray(lower, dtype=float)
        upper = np.ones(d) if upper is None else np.asarray(upper, dtype=float)
        if len(y_raw) >= 2:
            mean = float(np.mean(y_raw))
            std = float(np.std(y_raw))
            if std <= 0.0:
                std = 1.0
        else:
            mean, std = 0.0, 1.0
        y = (y_raw - mean) / std
        return cls(X, y, mean, std, lower, upper)

    def y_raw(self) -> np.ndarray:
        return self.y * self.y_std + self.y_mean


@dataclass(frozen=True)
class FittedGP:
    """Posterior-ready GP: kernel spec, hyperparameters and solved factors.

    ``chol`` is the lower Cholesky factor of ``K + noise^2 I + jitter I``
    and ``alpha`` the corresponding solve against the standardized targets.
    Instances are immutable and safe to share across threads.
    """

    spec: KernelSpec
    theta: HyperParams
    data: Dataset
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0

    def __post_init__(self) -> None:
        self.chol.setflags(write=False)
        self.alpha.setflags(write=False)

    def lml_terms(self) -> tuple[float, float, float]:
        """(data-fit, complexity, normalisation) terms of the log marginal
        likelihood; their sum is the LML."""
        n = self.data.n
        data_fit = -0.5 * float(self.data.y @ self.alpha)
        complexity = -float(np.sum(np.log(np.diag(self.chol))))
        return data_fit, complexity, -0.5 * n * LOG_2PI

    def lml(self) -> float:
        return sum(self.lml_terms())


def _factorize(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor with escalating jitter.

    Tries the matrix as-is, then adds ``frac * mean(diag(A))`` for each
    fraction in the ladder. Raises NotPositiveDefiniteError when all fail.
    """
    mean_diag = float(np.mean(np.diag(A)))
    attempted: list[float] = []
    for frac in (0.0, *JITTER_FRACTIONS):
        jitter = frac * mean_diag
        attempted.append(jitter)
        B = A if jitter == 0.0 else A + jitter * np.eye(A.shape[0])
        c, info = dpotrf(B, lower=1, overwrite_a=(jitter != 0.0))
        if info == 0:
            if jitter > 0.0:
                logger.debug("cholesky needed jitter %.3e", jitter)
                _record_jitter_event()
            return np.tril(c), jitter
    raise NotPositiveDefiniteError(tuple(attempted))


def fit(spec: KernelSpec, theta: HyperParams, data: Dataset) -> FittedGP:
    """Factorize the noisy covariance and cache the target solve."""
    K = kernel_matrix(spec, theta, data.X)
    A = K + theta.noise**2 * np.eye(data.n)
    L, jitter = _factorize(A)
    alpha, _ = dpotrs(L, data.y, lower=1)
    return FittedGP(spec, theta, data, L, alpha, jitter)


def log_marginal_likelihood(
    spec: KernelSpec, theta: HyperParams, data: Dataset
) -> float:
    """Log marginal likelihood of the standardized observations.

    Returns -inf (worst possible for an optimiser) when the covariance is
    not positive definite even after jitter escalation.
    """
    try:
        return fit(spec, theta, data).lml()
    except NotPositiveDefiniteError:
        logger.warning("non-PD covariance at theta=%s; returning -inf", theta)
        return -math.inf


def _lml_value_grad_raw(
    family: KernelFamily,
    ard: bool,
    X: np.ndarray,
    y: np.ndarray,
    ell: np.ndarray,
    sf: float,
    sn: float,
) -> tuple[float, np.ndarray]:
    """Hot path: LML value and gradient over (lengthscales..., sf, sn).

    ``ell`` must already be expanded to one entry per input dimension.
    Returns (-inf, zeros) when factorisation fails. Called per leapfrog
    step by the samplers, so avoids all dataclass construction.
    """
    n = X.shape[0]
    p = X.shape[1] if ard else 1
    if family is KernelFamily.SQUARED_EXPONENTIAL:
        K, G = _core.se_matrix_with_gradients(X, ell, sf * sf, ard)
    else:
        K, G = _core.matern52_matrix_with_gradients(X, ell, sf * sf, ard)

    A = K
    A.flat[:: n + 1] += sn * sn
    mean_diag = sf * sf + sn * sn  # the kernel diagonal is exactly sf^2
    L = None
    applied = 0.0
    for frac in (0.0, *JITTER_FRACTIONS):
        jitter = frac * mean_diag
        if jitter != applied:
            A.flat[:: n + 1] += jitter - applied
            applied = jitter
        c, info = dpotrf(A, lower=1)
        if info == 0:
            L = c
            if jitter > 0.0:
                _record_jitter_event()
            break
    if L is None:
        return -math.inf, np.zeros(p + 2)

    alpha, _ = dpotrs(L, y, lower=1)
    value = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * LOG_2PI
    )

    ainv, _ = dpotri(L, lower=1)  # lower triangle only
    grad = np.empty(p + 2)
    grad[: p + 1], trace_w = _core.lml_grad_contract(ainv, alpha, G)
    grad[p + 1] = sn * trace_w
    return value, grad


def lml_value_and_gradient(
    spec: KernelSpec, theta: HyperParams, data: Dataset
) -> tuple[float, np.ndarray]:
    """LML and its gradient over (lengthscales..., outputscale, noise)."""
    from .kernels import _check_consistent, _expanded_ell

    _check_consistent(spec, theta)
    ell = _expanded_ell(spec, theta)
    return _lml_value_grad_raw(
        spec.family, spec.ard, data.X, data.y, ell, theta.outputscale, theta.noise
    )


def lml_gradient(spec: KernelSpec, theta: HyperParams, data: Dataset) -> np.ndarray:
    return lml_value_and_gradient(spec, theta, data)[1]


def predict(gp: FittedGP, xstar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance of the latent function.

    Accepts a single location (d,) or a batch (m, d); returns arrays of
    matching leading shape. Variances are clamped at zero against
    round-off.
    """
    xstar = np.asarray(xstar, dtype=float)
    single = xstar.ndim == 1
    Xs = xstar.reshape(1, -1) if single else xstar
    kstar = kernel_cross(gp.spec, gp.theta, gp.data.X, Xs)
    mu = kstar.T @ gp.alpha
    v = solve_triangular(gp.chol, kstar, lower=True)
    var = gp.theta.outputscale**2 - np.einsum("ij,ij->j", v, v)
    var = np.maximum(var, 0.0)
    if single:
        return mu[0], var[0]
    return mu, var
