"""No-U-Turn sampler with dual-averaging step size and diagonal mass
adaptation.

The transition kernel is the slice-variable tree-doubling construction:
trajectories are extended by doubling in a random direction until the
no-U-turn criterion fires (measured with velocities ``M^-1 p``), and the
next state is drawn uniformly from the valid states of the final tree.
Warmup interleaves dual-averaging step-size adaptation with windowed
estimation of a diagonal mass matrix; both are frozen afterwards.

The sampler itself is density-agnostic: it consumes any callable
returning ``(log density, gradient)``. :func:`nuts_sample` wraps it
around the GP hyperparameter posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from ..gp import Dataset, jitter_event_count
from ..kernels import KernelSpec
from ..priors import PriorSpec, UnconstrainedPosterior
from .samples import InferenceError, PosteriorSamples, Provenance

LogDensity = Callable[[np.ndarray], tuple[float, np.ndarray]]

# Energy-error threshold marking a divergent transition.
DELTA_MAX = 1000.0

# Abort threshold on the post-adaptation divergent-transition fraction.
MAX_DIVERGENCE_FRACTION = 0.25


@dataclass
class _DualAveraging:
    """Nesterov dual averaging on log step size."""

    mu: float
    log_eps: float
    log_eps_bar: float = 0.0
    h_bar: float = 0.0
    t: int = 0
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75

    def update(self, accept_stat: float, target: float) -> float:
        self.t += 1
        eta = 1.0 / (self.t + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (target - accept_stat)
        self.log_eps = self.mu - (math.sqrt(self.t) / self.gamma) * self.h_bar
        w = self.t ** (-self.kappa)
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar
        return math.exp(self.log_eps)

    def adapted(self) -> float:
        return math.exp(self.log_eps_bar)


def leapfrog(
    f: LogDensity,
    z: np.ndarray,
    p: np.ndarray,
    grad: np.ndarray,
    eps: float,
    inv_mass: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """One leapfrog step; returns (z', p', logp(z'), grad logp(z'))."""
    p_half = p + 0.5 * eps * grad
    z_new = z + eps * (inv_mass * p_half)
    value, grad_new = f(z_new)
    p_new = p_half + 0.5 * eps * grad_new
    return z_new, p_new, value, grad_new


def _joint(value: float, p: np.ndarray, inv_mass: np.ndarray) -> float:
    return value - 0.5 * float(np.dot(p, inv_mass * p))


def _is_uturn(
    z_minus: np.ndarray,
    z_plus: np.ndarray,
    p_minus: np.ndarray,
    p_plus: np.ndarray,
    inv_mass: np.ndarray,
) -> bool:
    dz = z_plus - z_minus
    return (
        float(np.dot(dz, inv_mass * p_minus)) < 0.0
        or float(np.dot(dz, inv_mass * p_plus)) < 0.0
    )


def find_reasonable_epsilon(
    f: LogDensity,
    z: np.ndarray,
    value: float,
    grad: np.ndarray,
    inv_mass: np.ndarray,
    rng: np.random.Generator,
) -> float:
    """Initial step size crossing 50% acceptance, by doubling/halving."""
    eps = 1.0
    p = rng.standard_normal(z.shape) / np.sqrt(inv_mass)
    joint0 = _joint(value, p, inv_mass)
    _, p1, value1, _ = leapfrog(f, z, p, grad, eps, inv_mass)
    log_ratio = _joint(value1, p1, inv_mass) - joint0
    if not math.isfinite(log_ratio):
        log_ratio = -math.inf
    direction = 1.0 if log_ratio > math.log(0.5) else -1.0
    while direction * log_ratio > -direction * math.log(2.0):
        eps *= 2.0**direction
        if eps < 1e-10 or eps > 1e7:
            break
        _, p1, value1, _ = leapfrog(f, z, p, grad, eps, inv_mass)
        log_ratio = _joint(value1, p1, inv_mass) - joint0
        if not math.isfinite(log_ratio):
            log_ratio = -math.inf
    return eps


class _Tree:
    """Mutable result of building one subtree."""

    __slots__ = (
        "z_minus", "p_minus", "g_minus", "z_plus", "p_plus", "g_plus",
        "z_prop", "v_prop", "g_prop", "n_valid", "keep_going",
        "alpha_sum", "n_alpha", "divergent",
    )


def _build_tree(
    f: LogDensity,
    z: np.ndarray,
    p: np.ndarray,
    grad: np.ndarray,
    log_u: float,
    direction: int,
    depth: int,
    eps: float,
    inv_mass: np.ndarray,
    joint0: float,
    rng: np.random.Generator,
) -> _Tree:
    if depth == 0:
        z1, p1, value1, grad1 = leapfrog(f, z, p, grad, direction * eps, inv_mass)
        joint1 = _joint(value1, p1, inv_mass) if math.isfinite(value1) else -math.inf
        out = _Tree()
        out.z_minus = out.z_plus = out.z_prop = z1
        out.p_minus = out.p_plus = p1
        out.g_minus = out.g_plus = out.g_prop = grad1
        out.v_prop = value1
        out.n_valid = 1 if log_u <= joint1 else 0
        out.divergent = not (log_u < DELTA_MAX + joint1)
        out.keep_going = not out.divergent
        out.alpha_sum = min(1.0, math.exp(min(0.0, joint1 - joint0)))
        out.n_alpha = 1
        return out

    tree = _build_tree(
        f, z, p, grad, log_u, direction, depth - 1, eps, inv_mass, joint0, rng
    )
    if tree.keep_going:
        if direction == -1:
            sub = _build_tree(
                f, tree.z_minus, tree.p_minus, tree.g_minus,
                log_u, direction, depth - 1, eps, inv_mass, joint0, rng,
            )
            tree.z_minus, tree.p_minus, tree.g_minus = (
                sub.z_minus, sub.p_minus, sub.g_minus,
            )
        else:
            sub = _build_tree(
                f, tree.z_plus, tree.p_plus, tree.g_plus,
                log_u, direction, depth - 1, eps, inv_mass, joint0, rng,
            )
            tree.z_plus, tree.p_plus, tree.g_plus = (
                sub.z_plus, sub.p_plus, sub.g_plus,
            )
        total = tree.n_valid + sub.n_valid
        if sub.n_valid > 0 and rng.random() < sub.n_valid / total:
            tree.z_prop, tree.v_prop, tree.g_prop = sub.z_prop, sub.v_prop, sub.g_prop
        tree.n_valid = total
        tree.alpha_sum += sub.alpha_sum
        tree.n_alpha += sub.n_alpha
        tree.divergent = tree.divergent or sub.divergent
        tree.keep_going = (
            sub.keep_going
            and not _is_uturn(
                tree.z_minus, tree.z_plus, tree.p_minus, tree.p_plus, inv_mass
            )
        )
    return tree


def _transition(
    f: LogDensity,
    z: np.ndarray,
    value: float,
    grad: np.ndarray,
    eps: float,
    inv_mass: np.ndarray,
    max_depth: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float, np.ndarray, float, bool, int]:
    """One NUTS update; returns (z', logp', grad', accept_stat, divergent, depth)."""
    p0 = rng.standard_normal(z.shape) / np.sqrt(inv_mass)
    joint0 = _joint(value, p0, inv_mass)
    log_u = joint0 - rng.exponential()

    z_minus = z_plus = z
    p_minus = p_plus = p0
    g_minus = g_plus = grad
    z_next, v_next, g_next = z, value, grad
    n_valid = 1
    depth = 0
    divergent = False
    alpha_sum, n_alpha = 0.0, 0

    while depth < max_depth:
        direction = 1 if rng.random() < 0.5 else -1
        if direction == -1:
            tree = _build_tree(
                f, z_minus, p_minus, g_minus, log_u, direction, depth,
                eps, inv_mass, joint0, rng,
            )
            z_minus, p_minus, g_minus = tree.z_minus, tree.p_minus, tree.g_minus
        else:
            tree = _build_tree(
                f, z_plus, p_plus, g_plus, log_u, direction, depth,
                eps, inv_mass, joint0, rng,
            )
            z_plus, p_plus, g_plus = tree.z_plus, tree.p_plus, tree.g_plus

        alpha_sum += tree.alpha_sum
        n_alpha += tree.n_alpha
        divergent = divergent or tree.divergent
        if tree.keep_going and tree.n_valid > 0:
            if rng.random() < min(1.0, tree.n_valid / n_valid):
                z_next, v_next, g_next = tree.z_prop, tree.v_prop, tree.g_prop
        n_valid += tree.n_valid
        depth += 1
        if not tree.keep_going or _is_uturn(z_minus, z_plus, p_minus, p_plus, inv_mass):
            break

    accept_stat = alpha_sum / max(n_alpha, 1)
    return z_next, v_next, g_next, accept_stat, divergent, depth


def _adaptation_windows(n_warmup: int) -> list[tuple[int, int]]:
    """Doubling windows for mass estimation, between settle-in and
    step-size-polish buffers (no windows for very short warmups)."""
    if n_warmup < 40:
        return []
    init_buffer = max(10, int(0.15 * n_warmup))
    term_buffer = max(10, int(0.10 * n_warmup))
    start = init_buffer
    end = n_warmup - term_buffer
    if end - start < 20:
        return []
    windows = []
    width = max(20, (end - start) // 8)
    while start + width < end:
        windows.append((start, start + width))
        start += width
        width *= 2
    windows.append((start, end))
    return windows


def _run_chain(
    f: LogDensity,
    z0: np.ndarray,
    n_warmup: int,
    n_post: int,
    rng: np.random.Generator,
    target_accept: float,
    max_depth: int,
) -> tuple[np.ndarray, dict[str, Any]]:
    """Warm up, then record ``n_post`` post-warmup states."""
    dim = z0.shape[0]
    z = np.asarray(z0, dtype=float)
    value, grad = f(z)
    if not math.isfinite(value):
        raise InferenceError("NUTS chain started at a zero-probability point")

    inv_mass = np.ones(dim)
    eps = find_reasonable_epsilon(f, z, value, grad, inv_mass, rng)
    da = _DualAveraging(mu=math.log(10.0 * eps), log_eps=math.log(eps))

    windows = _adaptation_windows(n_warmup)
    window_idx = 0
    welford_n = 0
    welford_mean = np.zeros(dim)
    welford_m2 = np.zeros(dim)

    accepts: list[float] = []
    divergences = 0
    draws = np.empty((n_post, dim))

    for it in range(n_warmup + n_post):
        z, value, grad, accept, divergent, _ = _transition(
            f, z, value, grad, eps, inv_mass, max_depth, rng
        )
        if it < n_warmup:
            eps = da.update(accept, target_accept)
            if window_idx < len(windows):
                lo, hi = windows[window_idx]
                if lo <= it < hi:
                    welford_n += 1
                    delta = z - welford_mean
                    welford_mean += delta / welford_n
                    welford_m2 += delta * (z - welford_mean)
                if it == hi - 1:
                    if welford_n >= 2:
                        var = welford_m2 / (welford_n - 1)
                        # shrink towards a small scale for stability
                        var = (welford_n / (welford_n + 5.0)) * var + 1e-3 * (
                            5.0 / (welford_n + 5.0)
                        )
                        inv_mass = var
                        eps = find_reasonable_epsilon(f, z, value, grad, inv_mass, rng)
                        da = _DualAveraging(
                            mu=math.log(10.0 * eps), log_eps=math.log(eps)
                        )
                    window_idx += 1
                    welford_n = 0
                    welford_mean = np.zeros(dim)
                    welford_m2 = np.zeros(dim)
            if it == n_warmup - 1:
                eps = da.adapted()
        else:
            accepts.append(accept)
            if divergent:
                divergences += 1
            draws[it - n_warmup] = z

    diag = {
        "step_size": eps,
        "mean_accept": float(np.mean(accepts)) if accepts else 0.0,
        "divergences": divergences,
        "divergence_fraction": divergences / max(n_post, 1),
    }
    return draws, diag


def split_rhat(draws: np.ndarray) -> np.ndarray:
    """Split-chain potential scale reduction factor per coordinate.

    ``draws`` has shape (chains, iterations, dim); each chain is split in
    half, so 2*chains sequences enter the between/within variance ratio.
    """
    c, n, dim = draws.shape
    half = n // 2
    if half < 2:
        return np.full(dim, np.nan)
    halves = np.concatenate([draws[:, :half, :], draws[:, half : 2 * half, :]], axis=0)
    means = halves.mean(axis=1)
    variances = halves.var(axis=1, ddof=1)
    w = variances.mean(axis=0)
    b = half * means.var(axis=0, ddof=1)
    var_plus = (half - 1) / half * w + b / half
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(var_plus / w)


def sample_density(
    f: LogDensity,
    z0: np.ndarray,
    n_warmup: int,
    n_keep: int,
    thin: int,
    rng: np.random.Generator,
    target_accept: float = 0.8,
    max_depth: int = 10,
) -> tuple[np.ndarray, dict[str, Any]]:
    """Run NUTS chains on an arbitrary log density.

    ``z0`` has shape (chains, dim). Each chain runs ``n_warmup`` adaptation
    iterations followed by ``n_keep * thin`` sampling iterations of which
    every ``thin``-th is kept. Returns kept draws with shape
    (chains, n_keep, dim) plus diagnostics.
    """
    z0 = np.atleast_2d(np.asarray(z0, dtype=float))
    chains = z0.shape[0]
    if thin < 1:
        raise ValueError(f"thin must be >= 1, got {thin}")
    chain_rngs = rng.spawn(chains)
    kept = np.empty((chains, n_keep, z0.shape[1]))
    chain_diags = []
    for c in range(chains):
        draws, diag = _run_chain(
            f, z0[c], n_warmup, n_keep * thin, chain_rngs[c],
            target_accept, max_depth,
        )
        kept[c] = draws[thin - 1 :: thin]
        chain_diags.append(diag)

    rhat = split_rhat(kept) if chains >= 2 else np.full(z0.shape[1], np.nan)
    diagnostics = {
        "chains": chain_diags,
        "rhat": rhat.tolist(),
        "mean_accept": float(np.mean([d["mean_accept"] for d in chain_diags])),
        "divergence_fraction": float(
            np.mean([d["divergence_fraction"] for d in chain_diags])
        ),
    }
    return kept, diagnostics


def nuts_sample(
    spec: KernelSpec,
    priors: PriorSpec,
    data: Dataset,
    chains: int,
    burn_in: int,
    thin: int,
    m: int,
    rng: np.random.Generator,
    fixed_noise: float | None = None,
    target_accept: float = 0.8,
    max_depth: int = 10,
) -> PosteriorSamples:
    """Sample the GP hyperparameter posterior with NUTS.

    Draws ``m`` samples in total (``m`` must divide evenly across chains):
    each chain contributes its post-burn-in trajectory thinned by ``thin``.
    Chains start from independent draws from the priors.
    """
    if chains < 1:
        raise ValueError(f"chains must be >= 1, got {chains}")
    if m % chains != 0:
        raise ValueError(f"sample count {m} not divisible by {chains} chains")
    posterior = UnconstrainedPosterior(spec, priors, data, fixed_noise)
    starts = []
    for _ in range(chains):
        # prior draws can land on numerically non-PD kernels; retry a few times
        for _attempt in range(20):
            z = posterior.sample_prior_z(rng)
            if math.isfinite(posterior.value_and_grad(z)[0]):
                break
        else:
            raise InferenceError("could not find a finite-density chain start")
        starts.append(z)
    z0 = np.stack(starts)
    jitter_before = jitter_event_count()
    kept, diagnostics = sample_density(
        posterior.value_and_grad,
        z0,
        n_warmup=burn_in,
        n_keep=m // chains,
        thin=thin,
        rng=rng,
        target_accept=target_accept,
        max_depth=max_depth,
    )
    diagnostics["jitter_events"] = jitter_event_count() - jitter_before
    if diagnostics["divergence_fraction"] > MAX_DIVERGENCE_FRACTION:
        raise InferenceError(
            f"divergent-transition fraction "
            f"{diagnostics['divergence_fraction']:.2f} exceeds "
            f"{MAX_DIVERGENCE_FRACTION}",
            diagnostics,
        )
    flat = kept.reshape(-1, kept.shape[2])
    thetas = tuple(posterior.theta_from_z(z) for z in flat)
    return PosteriorSamples(thetas, Provenance.MCMC, diagnostics)
