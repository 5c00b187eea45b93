"""Campaign orchestration: repeats x configurations with shared designs.

A campaign is a cross product of run configurations executed for R
repeats. Repeat r of every configuration uses the same seed, so all
methods start from identical initial designs and see identical noise
streams, enabling paired statistical comparison. Completed runs are
persisted as trace files named by a content key (config hash), making
campaigns resumable: existing files are never recomputed or rewritten.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import os
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

from .. import benchmarks, driver
from ..benchmarks import RangeCache
from ..driver import RunConfig, RunTrace


def repeat_seed(base_seed: int, repeat: int) -> int:
    """Seed for one repeat, identical across every method in the campaign."""
    return base_seed * 1000 + repeat


@dataclass(frozen=True)
class Campaign:
    """Run configurations (seed field ignored) plus a repeat schedule."""

    configs: tuple[RunConfig, ...]
    repeats: int
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.configs:
            raise ValueError("campaign needs at least one configuration")

    def runs(self) -> list[RunConfig]:
        return [
            dataclasses.replace(cfg, seed=repeat_seed(self.base_seed, r))
            for r, cfg in itertools.product(range(self.repeats), self.configs)
        ]


def make_campaign(
    functions: list[str],
    noises: list[float],
    acquisitions: list[str],
    kernels: list[str],
    backends: list[str],
    repeats: int,
    base_seed: int = 0,
    **knobs,
) -> Campaign:
    """Cross product of the experiment axes."""
    configs = tuple(
        RunConfig(
            function=fn, noise=noise, acquisition=acq, kernel=kernel,
            inference=backend, **knobs,
        )
        for fn, noise, acq, kernel, backend in itertools.product(
            functions, noises, acquisitions, kernels, backends
        )
    )
    return Campaign(configs, repeats, base_seed)


def run_key(config: RunConfig) -> str:
    """Content key: hash of the canonical config (seed included)."""
    canonical = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def trace_filename(config: RunConfig) -> str:
    return (
        f"{config.function}_n{config.noise:g}_{config.acquisition}_"
        f"{config.kernel}_{config.inference}_s{config.seed}_{run_key(config)}.jsonl"
    )


@dataclass
class CampaignResult:
    completed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)

    def trace_paths(self) -> list[str]:
        return sorted(self.completed + self.skipped)


def _execute(config: RunConfig, path: str, cache_path: str) -> str:
    trace = driver.run(config, RangeCache(cache_path))
    trace.save(path)
    return path


def run_campaign(
    campaign: Campaign, out_dir: str, parallelism: int = 1
) -> CampaignResult:
    """Execute all (config, repeat) runs, skipping persisted ones.

    Individual run failures are recorded and the campaign continues.
    """
    os.makedirs(out_dir, exist_ok=True)
    cache_path = os.path.join(out_dir, "range_cache.json")
    result = CampaignResult()

    pending: list[tuple[RunConfig, str]] = []
    for config in campaign.runs():
        path = os.path.join(out_dir, trace_filename(config))
        if os.path.exists(path):
            result.skipped.append(path)
        else:
            pending.append((config, path))

    # Warm the range cache serially so parallel workers only read it.
    cache = RangeCache(cache_path)
    for config, _ in pending:
        if config.noise > 0.0:
            benchmarks.estimate_range(
                benchmarks.get(config.function), config.range_samples, cache=cache
            )

    if parallelism <= 1:
        for config, path in pending:
            try:
                result.completed.append(_execute(config, path, cache_path))
            except Exception:
                result.failures[path] = traceback.format_exc()
        return result

    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        futures = {
            pool.submit(_execute, config, path, cache_path): path
            for config, path in pending
        }
        for future in as_completed(futures):
            path = futures[future]
            try:
                result.completed.append(future.result())
            except Exception:
                result.failures[path] = traceback.format_exc()
    return result


def load_traces(directory: str) -> list[RunTrace]:
    """All trace files in a campaign directory."""
    traces = []
    for name in sorted(os.listdir(directory)):
        if name.endswith(".jsonl"):
            traces.append(RunTrace.load(os.path.join(directory, name)))
    return traces
