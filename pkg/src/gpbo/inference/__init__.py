"""Hyperparameter inference backends.

Four ways to obtain hyperparameters for the GP surrogate:

* :func:`map_estimate` -- multi-start MAP point estimation;
* :func:`nuts_sample` -- Hamiltonian Monte Carlo (No-U-Turn sampler);
* :func:`advi_fit` + :func:`draw_samples` -- mean-field or full-rank
  Gaussian variational inference;
* :func:`map_as_samples` -- wrap a point estimate as a delta-function
  sample collection so downstream code can treat all backends uniformly.
"""

from .advi import (
    FULL_RANK,
    MEAN_FIELD,
    VariationalState,
    advi_fit,
    draw_samples,
    draw_z,
    fit_density,
)
from .nuts import nuts_sample, sample_density, split_rhat
from .point import map_estimate, maximize_density
from .samples import InferenceError, PosteriorSamples, Provenance, map_as_samples

__all__ = [
    "FULL_RANK",
    "MEAN_FIELD",
    "InferenceError",
    "PosteriorSamples",
    "Provenance",
    "VariationalState",
    "advi_fit",
    "draw_samples",
    "draw_z",
    "fit_density",
    "map_as_samples",
    "map_estimate",
    "maximize_density",
    "nuts_sample",
    "sample_density",
    "split_rhat",
]
