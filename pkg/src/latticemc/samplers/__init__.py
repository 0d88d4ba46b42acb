"""Markov-chain and direct samplers."""

from .backends import (
    ExactGaussianBackend,
    HMCBackend,
    HMCParams,
    ProposalBackend,
    exact_gaussian_backend,
    hmc_backend,
    leapfrog,
    perfect_security_backend,
    RadialRejectionBackend,
)
from .imhr import ChainRun, ChainState, imhr_ensemble, imhr_run, imhr_step
from .io import read_lsmp, read_samples_csv, write_lsmp, write_samples_csv
from .klein import (
    DiscreteGaussianTable,
    KleinParams,
    discrete_gaussian_1d,
    gram_schmidt,
    klein_sample,
    klein_sample_batch,
)
from .rwm import rwm_marginal_oracle

__all__ = [
    "ExactGaussianBackend",
    "HMCBackend",
    "HMCParams",
    "ProposalBackend",
    "RadialRejectionBackend",
    "exact_gaussian_backend",
    "hmc_backend",
    "leapfrog",
    "perfect_security_backend",
    "ChainRun",
    "ChainState",
    "imhr_ensemble",
    "imhr_run",
    "imhr_step",
    "read_lsmp",
    "read_samples_csv",
    "write_lsmp",
    "write_samples_csv",
    "DiscreteGaussianTable",
    "KleinParams",
    "discrete_gaussian_1d",
    "gram_schmidt",
    "klein_sample",
    "klein_sample_batch",
    "rwm_marginal_oracle",
]
