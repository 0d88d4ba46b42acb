"""Sampling from lattice distributions with Independent Metropolis-Hastings and rounding."""

from .densities import (
    IsotropicGaussianPotential,
    PerfectSecurityPotential,
    PullbackGaussianPotential,
    SigmoidTarget,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .lattice import GeneratorMatrix, InvalidInputError, leech_generator, round_nearest
from .samplers import imhr_run, imhr_step

__version__ = "0.1.0"

__all__ = [
    "IsotropicGaussianPotential",
    "PerfectSecurityPotential",
    "PullbackGaussianPotential",
    "SigmoidTarget",
    "KERNEL_BACKEND",
    "GeneratorMatrix",
    "InvalidInputError",
    "leech_generator",
    "round_nearest",
    "imhr_run",
    "imhr_step",
]
