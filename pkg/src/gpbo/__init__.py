"""Bayesian optimisation with fully-Bayesian GP hyperparameter treatment.

Gaussian-process surrogates whose hyperparameters are handled by MAP
estimation, Hamiltonian Monte Carlo (NUTS) or variational inference,
driving EI/UCB acquisition over a noise-configurable benchmark suite,
with a campaign harness for paired statistical comparison.
"""

from ._core import BACKEND as core_backend
from .driver import RunConfig, RunTrace, run, simple_regret
from .gp import Dataset, FittedGP, fit, log_marginal_likelihood, predict
from .kernels import HyperParams, KernelFamily, KernelSpec

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FittedGP",
    "HyperParams",
    "KernelFamily",
    "KernelSpec",
    "RunConfig",
    "RunTrace",
    "core_backend",
    "fit",
    "log_marginal_likelihood",
    "predict",
    "run",
    "simple_regret",
]
