"""Acquisition functions and their maximisation over the unit cube.

Expected Improvement and Upper Confidence Bound (minimisation convention:
both are maximised to pick the next evaluation), their posterior-averaged
forms over a collection of fitted GPs sharing the same data, a
logarithmically increasing UCB trade-off schedule, and a pool-then-refine
maximiser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.optimize import minimize
from scipy.special import ndtr

from .design import latin_hypercube
from .gp import FittedGP, predict
from .inference.samples import PosteriorSamples
from .kernels import KernelFamily

# Predictive variances below this are treated as deterministic in EI.
VARIANCE_FLOOR = 1e-12

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which score to maximise: EI against an incumbent, or UCB with a
    non-negative exploration weight."""

    kind: str  # "ei" | "ucb"
    f_star: float | None = None
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("ei", "ucb"):
            raise ValueError(f"unknown acquisition kind: {self.kind!r}")
        if self.kind == "ei" and self.f_star is None:
            raise ValueError("EI requires the incumbent f_star")
        if self.kind == "ucb":
            if self.beta is None:
                raise ValueError("UCB requires beta")
            if self.beta < 0.0:
                raise ValueError(f"beta must be non-negative, got {self.beta}")


def expected_improvement(
    mu: np.ndarray | float, v: np.ndarray | float, f_star: float
) -> np.ndarray | float:
    """Expected improvement below the incumbent under N(mu, v).

    For variances under the floor the deterministic limit
    ``max(f_star - mu, 0)`` applies.
    """
    mu = np.asarray(mu, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0.0):
        raise ValueError("variances must be non-negative")
    sd = np.sqrt(np.maximum(v, VARIANCE_FLOOR))
    s = (f_star - mu) / sd
    phi = _INV_SQRT_2PI * np.exp(-0.5 * s * s)
    ei = sd * (s * ndtr(s) + phi)
    ei = np.where(v < VARIANCE_FLOOR, np.maximum(f_star - mu, 0.0), ei)
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def upper_confidence_bound(
    mu: np.ndarray | float, v: np.ndarray | float, beta: float
) -> np.ndarray | float:
    """Optimistic score -mu + sqrt(beta * v) (maximisation convention)."""
    if beta < 0.0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    mu = np.asarray(mu, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0.0):
        raise ValueError("variances must be non-negative")
    out = -mu + np.sqrt(beta * v)
    return float(out) if out.ndim == 0 else out


def beta_schedule(t: int, d: int, delta: float = 0.1) -> float:
    """Exploration weight growing logarithmically in the evaluation count.

    beta_t = 2 log(d t^2 pi^2 / (6 delta)), the standard finite-domain
    confidence schedule.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return 2.0 * math.log(d * t * t * math.pi**2 / (6.0 * delta))


def _score(acq: AcquisitionSpec, mu, v):
    if acq.kind == "ei":
        return expected_improvement(mu, v, acq.f_star)
    return upper_confidence_bound(mu, v, acq.beta)


def integrated_acquisition(
    acq: AcquisitionSpec,
    samples: PosteriorSamples | None,
    gps: list[FittedGP],
    x: np.ndarray,
) -> float:
    """Posterior-averaged acquisition: mean of per-model scores at x."""
    if len(gps) < 1:
        raise ValueError("at least one fitted GP is required")
    if samples is not None and len(samples) != len(gps):
        raise ValueError(
            f"sample/model count mismatch: {len(samples)} != {len(gps)}"
        )
    x = np.asarray(x, dtype=float)
    total = 0.0
    for gp in gps:
        mu, v = predict(gp, x)
        total += _score(acq, float(mu), float(v))
    return total / len(gps)


class GPEnsemble:
    """Batched prediction across fitted GPs sharing the same inputs.

    Precomputes, per model, the inverse of the noisy covariance so that a
    batch of query points can be scored for every model with a handful of
    matrix products. Used by the acquisition maximiser, where the same
    ensemble is evaluated at thousands of candidates.
    """

    def __init__(self, gps: list[FittedGP]):
        if len(gps) < 1:
            raise ValueError("at least one fitted GP is required")
        base = gps[0]
        self.family = base.spec.family
        self.X = np.ascontiguousarray(base.data.X)
        d = base.spec.d
        self.ells = np.stack(
            [
                np.asarray(g.theta.lengthscales)
                if g.spec.ard
                else np.full(d, g.theta.lengthscales[0])
                for g in gps
            ]
        )
        self.sf2 = np.array([g.theta.outputscale**2 for g in gps])
        self.alpha = np.stack([g.alpha for g in gps])
        self.a_inv = np.stack(
            [cho_solve((g.chol, True), np.eye(g.data.n)) for g in gps]
        )
        self.m = len(gps)

    def predict(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Means and variances for a (k, d) batch, each shaped (k, m)."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        diff2 = (self.X[None, :, :] - Xq[:, None, :]) ** 2  # (k, n, d)
        u = np.einsum("knd,md->kmn", diff2, 1.0 / self.ells**2)
        if self.family is KernelFamily.SQUARED_EXPONENTIAL:
            kstar = self.sf2[None, :, None] * np.exp(-u)
        else:
            r = np.sqrt(np.maximum(u, 0.0))
            kstar = (
                self.sf2[None, :, None]
                * (1.0 + math.sqrt(5.0) * r + (5.0 / 3.0) * u)
                * np.exp(-math.sqrt(5.0) * r)
            )
        mu = np.einsum("kmn,mn->km", kstar, self.alpha)
        quad = np.einsum("kmn,mnj,kmj->km", kstar, self.a_inv, kstar)
        var = np.maximum(self.sf2[None, :] - quad, 0.0)
        return mu, var

    def mean_score(self, acq: AcquisitionSpec, Xq: np.ndarray) -> np.ndarray:
        """Integrated acquisition for each of the (k, d) query points."""
        mu, var = self.predict(Xq)
        return np.mean(_score(acq, mu, var), axis=1)


def optimize_acquisition(
    acq: AcquisitionSpec,
    samples: PosteriorSamples | None,
    gps: list[FittedGP],
    d: int,
    rng: np.random.Generator,
    starts: int = 10,
    pool_size: int = 1024,
    maxiter: int = 50,
) -> np.ndarray:
    """Maximise the integrated acquisition over [0, 1]^d.

    A Latin hypercube candidate pool is scored first; the best ``starts``
    candidates (ties broken by lowest pool index) seed bounded
    quasi-Newton refinement with finite-difference gradients. Returns the
    best point found, clipped to the cube; never worse than every pool
    candidate.
    """
    if starts < 1:
        raise ValueError(f"starts must be >= 1, got {starts}")
    if samples is not None and len(samples) != len(gps):
        raise ValueError(
            f"sample/model count mismatch: {len(samples)} != {len(gps)}"
        )
    ensemble = GPEnsemble(gps)
    pool = latin_hypercube(pool_size, d, rng).points
    values = ensemble.mean_score(acq, pool)

    order = np.argsort(-values, kind="stable")[: min(starts, pool_size)]
    best_x = pool[order[0]].copy()
    best_value = float(values[order[0]])

    bounds = [(0.0, 1.0)] * d
    h = 1e-6
    probes = np.concatenate([np.zeros((1, d)), h * np.eye(d), -h * np.eye(d)])

    def negated_with_grad(x: np.ndarray) -> tuple[float, np.ndarray]:
        # one batched ensemble call per objective+central-difference gradient
        vals = ensemble.mean_score(acq, x[None, :] + probes)
        grad = (vals[1 : d + 1] - vals[d + 1 :]) / (2.0 * h)
        return -float(vals[0]), -grad

    for idx in order:
        result = minimize(
            negated_with_grad,
            pool[idx],
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": maxiter},
        )
        value = float(ensemble.mean_score(acq, result.x[None, :])[0])
        if value > best_value:
            best_x = result.x.copy()
            best_value = value
    return np.clip(best_x, 0.0, 1.0)
