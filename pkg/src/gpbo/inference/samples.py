"""Containers for hyperparameter posterior samples."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from ..kernels import HyperParams


class InferenceError(Exception):
    """An inference backend failed to produce usable output."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class Provenance(Enum):
    MAP_DELTA = "map-delta"
    MCMC = "mcmc"
    MFVI = "mfvi"
    FRVI = "frvi"


@dataclass(frozen=True)
class PosteriorSamples:
    """Ordered collection of hyperparameter samples with diagnostics.

    ``diagnostics`` is a JSON-serializable record whose keys depend on the
    backend (acceptance statistics and R-hat for MCMC, ELBO trace summary
    for VI, achieved log posterior for MAP).
    """

    samples: tuple[HyperParams, ...]
    provenance: Provenance
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.samples) < 1:
            raise ValueError("at least one posterior sample is required")
        if self.provenance is Provenance.MAP_DELTA and len(set(self.samples)) != 1:
            raise ValueError("MAP-delta samples must all be identical")

    @property
    def m(self) -> int:
        return len(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def to_array(self) -> np.ndarray:
        """Stacked (M, p + 2) array of (lengthscales..., outputscale, noise)."""
        return np.stack([s.to_vector() for s in self.samples])


def map_as_samples(theta: HyperParams, m: int) -> PosteriorSamples:
    """Delta-function posterior: m identical copies of a point estimate."""
    if m < 1:
        raise ValueError(f"sample count must be >= 1, got {m}")
    return PosteriorSamples((theta,) * m, Provenance.MAP_DELTA)
