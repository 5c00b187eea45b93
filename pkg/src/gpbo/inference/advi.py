"""Stochastic-gradient variational inference with Gaussian families.

Maximises the evidence lower bound

    ELBO(q) = E_q[log p(z)] + H[q]

over a mean-field (diagonal) or full-rank (Cholesky-parameterised)
Gaussian in the unconstrained space, using reparameterised Monte Carlo
gradients and Adam with a decaying step size. Convergence is declared
when the window-smoothed ELBO stops improving in relative terms.

Parameterisation: mean-field keeps omega = log(variance) per coordinate;
full-rank keeps a lower-triangular factor whose diagonal is optimised in
log space, so the covariance L L^T stays positive semidefinite by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..gp import Dataset
from ..kernels import KernelSpec
from ..priors import ParamLayout, PriorSpec, UnconstrainedPosterior
from .samples import InferenceError, PosteriorSamples, Provenance

LogDensity = Callable[[np.ndarray], tuple[float, np.ndarray]]

MEAN_FIELD = "mean-field"
FULL_RANK = "full-rank"

_LOG_2PI_E = math.log(2.0 * math.pi) + 1.0


@dataclass(frozen=True)
class VariationalState:
    """Fitted Gaussian approximation in the unconstrained space.

    ``omega`` (log marginal variances) is set for the mean-field family,
    ``scale_tril`` for the full-rank family. ``layout`` maps draws back to
    hyperparameters; it is None when the state was fitted to a raw density.
    """

    family: str
    mean: np.ndarray
    omega: np.ndarray | None
    scale_tril: np.ndarray | None
    elbo_trace: np.ndarray
    converged: bool
    steps: int
    layout: ParamLayout | None = None

    def covariance(self) -> np.ndarray:
        if self.family == MEAN_FIELD:
            return np.diag(np.exp(self.omega))
        return self.scale_tril @ self.scale_tril.T

    def entropy(self) -> float:
        j = self.mean.shape[0]
        if self.family == MEAN_FIELD:
            return 0.5 * float(np.sum(self.omega)) + 0.5 * j * _LOG_2PI_E
        return float(np.sum(np.log(np.diag(self.scale_tril)))) + 0.5 * j * _LOG_2PI_E


class _Adam:
    """Adam with a polynomially decaying global step size."""

    def __init__(self, dim: int, step_size: float, decay_scale: float = 200.0):
        self.step_size = step_size
        self.decay_scale = decay_scale
        self.m = np.zeros(dim)
        self.v = np.zeros(dim)
        self.t = 0

    def step(self, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        b1, b2, eps = 0.9, 0.999, 1e-8
        self.m = b1 * self.m + (1 - b1) * grad
        self.v = b2 * self.v + (1 - b2) * grad * grad
        m_hat = self.m / (1 - b1**self.t)
        v_hat = self.v / (1 - b2**self.t)
        lr = self.step_size / (1.0 + self.t / self.decay_scale) ** 0.75
        return lr * m_hat / (np.sqrt(v_hat) + eps)


def fit_density(
    f: LogDensity,
    dim: int,
    family: str,
    max_steps: int,
    mc_samples: int,
    rng: np.random.Generator,
    init_mean: np.ndarray | None = None,
    init_std: float = 0.1,
    step_size: float = 0.1,
    tol: float = 1e-4,
    window: int = 100,
) -> VariationalState:
    """Fit a Gaussian approximation to an arbitrary log density.

    Stops at ``max_steps`` or when the mean ELBO over the last ``window``
    steps improves by less than ``tol`` in relative terms over the
    previous window, three windows in a row. The returned parameters are
    averaged over the final window to strip residual stochastic-gradient
    jitter. A full window of non-finite ELBO estimates aborts.
    """
    if family not in (MEAN_FIELD, FULL_RANK):
        raise ValueError(f"unknown variational family: {family!r}")
    if max_steps < 1 or mc_samples < 1:
        raise ValueError("max_steps and mc_samples must be >= 1")

    mean = np.zeros(dim) if init_mean is None else np.asarray(init_mean, dtype=float).copy()
    if family == MEAN_FIELD:
        omega = np.full(dim, 2.0 * math.log(init_std))
        params = np.concatenate([mean, omega])
    else:
        # (mean, log-diagonal, strict lower triangle row-major)
        log_diag = np.full(dim, math.log(init_std))
        strict = np.zeros(dim * (dim - 1) // 2)
        params = np.concatenate([mean, log_diag, strict])

    tril_rows, tril_cols = np.tril_indices(dim, k=-1)
    opt = _Adam(params.shape[0], step_size)
    trace: list[float] = []
    converged = False
    prev_window_mean: float | None = None
    quiet_windows = 0
    bad_in_window = 0
    tail = np.zeros((window, params.shape[0]))
    tail_count = 0

    for step in range(1, max_steps + 1):
        m = params[:dim]
        if family == MEAN_FIELD:
            omega = params[dim:]
            sigma = np.exp(0.5 * omega)
            entropy = 0.5 * float(np.sum(omega)) + 0.5 * dim * _LOG_2PI_E
        else:
            log_diag = params[dim : 2 * dim]
            strict = params[2 * dim :]
            L = np.zeros((dim, dim))
            L[tril_rows, tril_cols] = strict
            L[np.diag_indices(dim)] = np.exp(log_diag)
            entropy = float(np.sum(log_diag)) + 0.5 * dim * _LOG_2PI_E

        eps_draws = rng.standard_normal((mc_samples, dim))
        grad_mean = np.zeros(dim)
        logp_sum = 0.0
        n_finite = 0
        if family == MEAN_FIELD:
            grad_omega = np.zeros(dim)
        else:
            grad_L = np.zeros((dim, dim))

        for k in range(mc_samples):
            e = eps_draws[k]
            z = m + sigma * e if family == MEAN_FIELD else m + L @ e
            value, g = f(z)
            if not math.isfinite(value):
                continue
            n_finite += 1
            logp_sum += value
            grad_mean += g
            if family == MEAN_FIELD:
                grad_omega += g * e * sigma * 0.5
            else:
                grad_L += np.outer(g, e)

        if n_finite == 0:
            trace.append(-math.inf)
            bad_in_window += 1
            if bad_in_window >= window:
                raise InferenceError(
                    "ELBO estimate non-finite over a full window",
                    {"step": step},
                )
            continue

        elbo = logp_sum / n_finite + entropy
        trace.append(elbo)
        bad_in_window = 0

        grad_mean /= n_finite
        if family == MEAN_FIELD:
            grad_omega = grad_omega / n_finite + 0.5
            grad = np.concatenate([grad_mean, grad_omega])
        else:
            grad_L /= n_finite
            grad_diag = grad_L[np.diag_indices(dim)] * np.diag(L) + 1.0
            grad_strict = grad_L[tril_rows, tril_cols]
            grad = np.concatenate([grad_mean, grad_diag, grad_strict])

        params = params + opt.step(grad)
        tail[tail_count % window] = params
        tail_count += 1

        if step % window == 0:
            window_mean = float(np.mean(trace[-window:]))
            if (
                prev_window_mean is not None
                and math.isfinite(window_mean)
                and math.isfinite(prev_window_mean)
            ):
                denom = max(abs(prev_window_mean), 1e-12)
                if abs(window_mean - prev_window_mean) / denom < tol:
                    quiet_windows += 1
                else:
                    quiet_windows = 0
                if quiet_windows >= 3:
                    converged = True
                    break
            prev_window_mean = window_mean

    if tail_count >= window:
        params = tail.mean(axis=0)
    m = params[:dim].copy()
    if family == MEAN_FIELD:
        return VariationalState(
            family=MEAN_FIELD,
            mean=m,
            omega=params[dim:].copy(),
            scale_tril=None,
            elbo_trace=np.asarray(trace),
            converged=converged,
            steps=len(trace),
        )
    L = np.zeros((dim, dim))
    L[tril_rows, tril_cols] = params[2 * dim :]
    L[np.diag_indices(dim)] = np.exp(params[dim : 2 * dim])
    return VariationalState(
        family=FULL_RANK,
        mean=m,
        omega=None,
        scale_tril=L,
        elbo_trace=np.asarray(trace),
        converged=converged,
        steps=len(trace),
    )


def advi_fit(
    spec: KernelSpec,
    priors: PriorSpec,
    data: Dataset,
    family: str,
    max_steps: int = 40000,
    mc_samples: int = 8,
    rng: np.random.Generator | None = None,
    fixed_noise: float | None = None,
    **kwargs: Any,
) -> VariationalState:
    """Variational approximation of the GP hyperparameter posterior.

    The variational mean starts at the prior modes (in log space) with an
    initial standard deviation of 0.1 in every coordinate.
    """
    if rng is None:
        rng = np.random.default_rng()
    posterior = UnconstrainedPosterior(spec, priors, data, fixed_noise)
    state = fit_density(
        posterior.value_and_grad,
        posterior.dim,
        family,
        max_steps=max_steps,
        mc_samples=mc_samples,
        rng=rng,
        init_mean=posterior.prior_mode_z(),
        **kwargs,
    )
    return VariationalState(
        family=state.family,
        mean=state.mean,
        omega=state.omega,
        scale_tril=state.scale_tril,
        elbo_trace=state.elbo_trace,
        converged=state.converged,
        steps=state.steps,
        layout=posterior.layout,
    )


def draw_z(
    state: VariationalState, m: int, rng: np.random.Generator
) -> np.ndarray:
    """m independent draws from q in the unconstrained space, shape (m, J)."""
    eps = rng.standard_normal((m, state.mean.shape[0]))
    if state.family == MEAN_FIELD:
        return state.mean + np.exp(0.5 * state.omega) * eps
    return state.mean + eps @ state.scale_tril.T


def draw_samples(
    state: VariationalState, m: int, rng: np.random.Generator
) -> PosteriorSamples:
    """m hyperparameter samples from a fitted variational state."""
    if m < 1:
        raise ValueError(f"sample count must be >= 1, got {m}")
    if state.layout is None:
        raise ValueError(
            "state has no parameter layout; it was fitted to a raw density"
        )
    zs = draw_z(state, m, rng)
    thetas = tuple(state.layout.theta_from_z(z) for z in zs)
    provenance = Provenance.MFVI if state.family == MEAN_FIELD else Provenance.FRVI
    diagnostics = {
        "elbo_final": float(state.elbo_trace[-1]) if len(state.elbo_trace) else None,
        "converged": state.converged,
        "steps": state.steps,
    }
    return PosteriorSamples(thetas, provenance, diagnostics)
