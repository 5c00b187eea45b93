"""Sequential Bayesian-optimisation loop.

Wires together the initial design, per-iteration hyperparameter
inference, acquisition maximisation and (noisy) objective evaluation,
producing a step-by-step trace. Inference runs from scratch every
iteration on freshly standardized data; a failed iteration falls back to
the previous iteration's hyperparameter samples, and two consecutive
failures abort the run with a partial trace.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import benchmarks
from .acquisition import AcquisitionSpec, beta_schedule, optimize_acquisition
from .design import maximin_lhs
from .gp import Dataset, FittedGP, NotPositiveDefiniteError, fit, jitter_event_count
from .inference import (
    InferenceError,
    PosteriorSamples,
    Provenance,
    advi_fit,
    draw_samples,
    map_as_samples,
    map_estimate,
    nuts_sample,
)
from .kernels import KernelFamily, KernelSpec
from .priors import NOISE_FREE_SIGMA, PriorSpec
from .benchmarks import NoisyObjective, RangeCache, from_unit_cube

REGRET_FLOOR = 1e-10

INFERENCE_BACKENDS = ("map", "mcmc", "mfvi", "frvi")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one optimisation run."""

    function: str
    noise: float = 0.0
    acquisition: str = "ei"  # "ei" | "ucb"
    kernel: str = "ard"  # "ard" | "iso"
    inference: str = "map"
    init_samples: int | None = None  # default 2d
    budget: int = 200
    posterior_samples: int = 256
    seed: int = 0
    # backend knobs
    map_restarts: int = 10
    chains: int = 4
    burn_in: int = 2048
    thin: int = 50
    advi_max_steps: int = 40000
    advi_mc_samples: int = 8
    acq_starts: int = 10
    acq_pool: int = 1024
    maximin_restarts: int = 100
    ucb_delta: float = 0.1
    range_samples: int = benchmarks.RANGE_SAMPLES

    def __post_init__(self) -> None:
        if self.acquisition not in ("ei", "ucb"):
            raise ValueError(f"unknown acquisition {self.acquisition!r}")
        if self.kernel not in ("ard", "iso"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.inference not in INFERENCE_BACKENDS:
            raise ValueError(f"unknown inference backend {self.inference!r}")
        if self.noise < 0.0:
            raise ValueError("noise fraction must be non-negative")
        if self.posterior_samples < 1:
            raise ValueError("posterior sample count must be >= 1")
        if self.inference == "mcmc" and self.posterior_samples % self.chains != 0:
            raise ValueError("posterior sample count must divide across chains")

    def resolved_init_samples(self, d: int) -> int:
        s = 2 * d if self.init_samples is None else self.init_samples
        if s < 2:
            raise ValueError(f"at least 2 initial samples required, got {s}")
        if s > self.budget:
            raise ValueError(
                f"initial samples ({s}) exceed the budget ({self.budget})"
            )
        return s

    def kernel_spec(self, d: int) -> KernelSpec:
        return KernelSpec(KernelFamily.MATERN52, ard=self.kernel == "ard", d=d)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "RunConfig":
        return cls(**payload)


@dataclass
class StepRecord:
    """One expensive evaluation."""

    t: int
    x_unit: np.ndarray
    x_native: np.ndarray
    y: float
    f_true: float
    best_f_true: float
    log_regret: float
    backend_diag: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0  # seconds; in-memory only, not serialized

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "x": [float(v) for v in self.x_unit],
            "x_native": [float(v) for v in self.x_native],
            "y": self.y,
            "f_true": self.f_true,
            "best_f_true": self.best_f_true,
            "log_regret": self.log_regret,
            "backend_diag": self.backend_diag,
        }


@dataclass
class RunTrace:
    """Per-iteration record of a BO run plus the generating config."""

    config: RunConfig
    records: list[StepRecord]
    f_min: float
    status: str = "ok"  # "ok" | "aborted"
    error: str | None = None

    def best_f_true(self) -> float:
        return self.records[-1].best_f_true

    def final_regret(self) -> float:
        return max(self.best_f_true() - self.f_min, 0.0)

    def save(self, path: str) -> None:
        """One JSON object per line: a header, then one object per step."""
        lines = [
            json.dumps(
                {
                    "config": self.config.to_dict(),
                    "seed": self.config.seed,
                    "f_min": self.f_min,
                    "status": self.status,
                    "error": self.error,
                },
                sort_keys=True,
            )
        ]
        lines += [json.dumps(r.to_json_dict(), sort_keys=True) for r in self.records]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str) -> "RunTrace":
        with open(path) as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        header, steps = lines[0], lines[1:]
        records = [
            StepRecord(
                t=obj["t"],
                x_unit=np.asarray(obj["x"]),
                x_native=np.asarray(obj["x_native"]),
                y=obj["y"],
                f_true=obj["f_true"],
                best_f_true=obj["best_f_true"],
                log_regret=obj["log_regret"],
                backend_diag=obj["backend_diag"],
            )
            for obj in steps
        ]
        return cls(
            config=RunConfig.from_dict(header["config"]),
            records=records,
            f_min=header["f_min"],
            status=header["status"],
            error=header.get("error"),
        )


def simple_regret(trace: RunTrace, f_min: float) -> np.ndarray:
    """Per-step log simple regret, floored at 1e-10 before the log."""
    if not trace.records:
        raise ValueError("trace is empty")
    best = np.array([r.best_f_true for r in trace.records])
    return np.log(np.maximum(best - f_min, REGRET_FLOOR))


def _run_inference(
    config: RunConfig,
    spec: KernelSpec,
    priors: PriorSpec,
    data: Dataset,
    rng: np.random.Generator,
    fixed_noise: float | None,
) -> tuple[PosteriorSamples, dict[str, Any]]:
    jitter_before = jitter_event_count()
    samples, diag = _dispatch_inference(config, spec, priors, data, rng, fixed_noise)
    jitter_events = jitter_event_count() - jitter_before
    if jitter_events:
        diag = {**diag, "jitter_events": jitter_events}
    return samples, diag


def _dispatch_inference(
    config: RunConfig,
    spec: KernelSpec,
    priors: PriorSpec,
    data: Dataset,
    rng: np.random.Generator,
    fixed_noise: float | None,
) -> tuple[PosteriorSamples, dict[str, Any]]:
    if config.inference == "map":
        theta, log_post = map_estimate(
            spec, priors, data, config.map_restarts, rng, fixed_noise
        )
        samples = map_as_samples(theta, config.posterior_samples)
        return samples, {"backend": "map", "log_posterior": log_post}
    if config.inference == "mcmc":
        samples = nuts_sample(
            spec, priors, data, config.chains, config.burn_in, config.thin,
            config.posterior_samples, rng, fixed_noise,
        )
        diag = samples.diagnostics
        rhat = [v for v in diag.get("rhat", []) if math.isfinite(v)]
        return samples, {
            "backend": "mcmc",
            "rhat_max": max(rhat) if rhat else None,
            "mean_accept": diag.get("mean_accept"),
            "divergence_fraction": diag.get("divergence_fraction"),
        }
    family = "mean-field" if config.inference == "mfvi" else "full-rank"
    state = advi_fit(
        spec, priors, data, family,
        max_steps=config.advi_max_steps,
        mc_samples=config.advi_mc_samples,
        rng=rng,
        fixed_noise=fixed_noise,
    )
    samples = draw_samples(state, config.posterior_samples, rng)
    return samples, {
        "backend": config.inference,
        "elbo": float(state.elbo_trace[-1]),
        "converged": state.converged,
        "steps": state.steps,
    }


def _fit_ensemble(
    spec: KernelSpec, samples: PosteriorSamples, data: Dataset
) -> tuple[list[FittedGP], int]:
    """Fit one GP per unique-enough sample; returns (models, dropped count).

    Delta collections collapse to a single model (the average of identical
    acquisition values is the value itself).
    """
    if samples.provenance is Provenance.MAP_DELTA:
        return [fit(spec, samples.samples[0], data)], 0
    gps: list[FittedGP] = []
    dropped = 0
    for theta in samples:
        try:
            gps.append(fit(spec, theta, data))
        except NotPositiveDefiniteError:
            dropped += 1
    if not gps:
        raise InferenceError("no posterior sample produced a positive-definite fit")
    return gps, dropped


def run(config: RunConfig, range_cache: RangeCache | None = None) -> RunTrace:
    """Execute one optimisation run."""
    fn = benchmarks.get(config.function)
    d = fn.d
    s = config.resolved_init_samples(d)
    spec = config.kernel_spec(d)
    priors = PriorSpec()
    fixed_noise = NOISE_FREE_SIGMA if config.noise == 0.0 else None

    seq = np.random.SeedSequence(config.seed)
    design_seed, noise_seed, inference_seed, acq_seed = seq.spawn(4)
    design_rng = np.random.default_rng(design_seed)
    inference_rng = np.random.default_rng(inference_seed)
    acq_rng = np.random.default_rng(acq_seed)

    f_range = 0.0
    if config.noise > 0.0:
        f_range = benchmarks.estimate_range(
            fn, config.range_samples, cache=range_cache
        )
    objective = NoisyObjective(
        fn, config.noise, f_range, np.random.default_rng(noise_seed)
    )

    records: list[StepRecord] = []
    best = math.inf

    def record_step(t, x_unit, x_native, y, f_true, diag, started) -> None:
        nonlocal best
        best = min(best, f_true)
        records.append(
            StepRecord(
                t=t,
                x_unit=np.asarray(x_unit, dtype=float),
                x_native=np.asarray(x_native, dtype=float),
                y=float(y),
                f_true=float(f_true),
                best_f_true=float(best),
                log_regret=float(math.log(max(best - fn.f_min, REGRET_FLOOR))),
                backend_diag=diag,
                wall_time=time.perf_counter() - started,
            )
        )

    design = maximin_lhs(s, d, design_rng, config.maximin_restarts)
    for i in range(s):
        started = time.perf_counter()
        x_unit = design.points[i]
        x_native = from_unit_cube(fn, x_unit)
        y, f_true = objective.noisy_evaluate(x_native)
        record_step(i + 1, x_unit, x_native, y, f_true, {"phase": "design"}, started)

    prev_samples: PosteriorSamples | None = None
    prev_failed = False
    status, error = "ok", None

    for t in range(s + 1, config.budget + 1):
        started = time.perf_counter()
        X = np.array([r.x_unit for r in records])
        y_raw = np.array([r.y for r in records])
        data = Dataset.standardize(X, y_raw, fn.lower, fn.upper)

        try:
            samples, diag = _run_inference(
                config, spec, priors, data, inference_rng, fixed_noise
            )
            prev_failed = False
        except InferenceError as exc:
            if prev_failed or prev_samples is None:
                status = "aborted"
                error = f"inference failed twice in a row at t={t}: {exc}"
                break
            samples = prev_samples
            diag = {"backend": config.inference, "fallback": True, "error": str(exc)}
            prev_failed = True
        prev_samples = samples

        try:
            gps, dropped = _fit_ensemble(spec, samples, data)
        except InferenceError as exc:
            status = "aborted"
            error = f"model fitting failed at t={t}: {exc}"
            break
        if dropped:
            diag = {**diag, "dropped_samples": dropped}

        incumbent = float(np.min(data.y))
        if config.acquisition == "ei":
            acq = AcquisitionSpec("ei", f_star=incumbent)
        else:
            acq = AcquisitionSpec("ucb", beta=beta_schedule(t, d, config.ucb_delta))

        x_unit = optimize_acquisition(
            acq, None, gps, d, acq_rng,
            starts=config.acq_starts, pool_size=config.acq_pool,
        )
        x_native = from_unit_cube(fn, x_unit)
        y, f_true = objective.noisy_evaluate(x_native)
        record_step(t, x_unit, x_native, y, f_true, diag, started)

    return RunTrace(config, records, fn.f_min, status, error)
