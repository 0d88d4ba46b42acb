"""Independence proposals: samplers (ideally exact) for the continuous density ``pi``."""

from __future__ import annotations

import logging
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..densities import (
    IsotropicGaussianPotential,
    PerfectSecurityPotential,
    Potential,
    PullbackGaussianPotential,
)
from ..lattice import GeneratorMatrix, InvalidInputError

logger = logging.getLogger(__name__)

__all__ = [
    "ProposalBackend",
    "ExactGaussianBackend",
    "HMCParams",
    "HMCBackend",
    "exact_gaussian_backend",
    "hmc_backend",
    "perfect_security_backend",
    "RadialRejectionBackend",
    "leapfrog",
]

DIVERGENCE_THRESHOLD = 1000.0


class ProposalBackend(ABC):
    """Draws proposals that do not depend on the chain's current state."""

    kind: str
    dim: int

    def __init__(self):
        self._lock = threading.Lock()
        self.flagged = 0

    def _flag(self, n: int):
        if n:
            with self._lock:
                self.flagged += int(n)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return self.draw_batch(rng, 1)[0]

    @abstractmethod
    def draw_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` independent proposals as an ``(n, d)`` array."""


class ExactGaussianBackend(ProposalBackend):
    """Exact draws from ``exp(-||B x - c||^2 / (2 sigma^2))`` (``B = I`` if no basis)."""

    kind = "exact-gaussian"

    def __init__(self, dim: int, variance: float, center=None, basis: GeneratorMatrix | None = None):
        super().__init__()
        if not variance > 0:
            raise InvalidInputError("variance must be positive")
        if basis is not None and basis.dim != dim:
            raise InvalidInputError("basis dimension does not match")
        self.dim = int(dim)
        self.sigma = math.sqrt(variance)
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float).reshape(dim)
        self.basis = basis

    def draw_batch(self, rng, n):
        g = self.center + self.sigma * rng.standard_normal((n, self.dim))
        if self.basis is None:
            return g
        try:
            return np.linalg.solve(self.basis.entries, g.T).T
        except np.linalg.LinAlgError as exc:
            raise InvalidInputError(f"singular basis: {exc}") from None


def exact_gaussian_backend(potential: Potential) -> ExactGaussianBackend:
    """Exact proposal sampler for a Gaussian-family potential."""
    if isinstance(potential, IsotropicGaussianPotential):
        return ExactGaussianBackend(potential.dim, potential.variance, potential.center)
    if isinstance(potential, PullbackGaussianPotential):
        return ExactGaussianBackend(potential.dim, potential.variance, potential.center, potential.basis)
    raise InvalidInputError(f"no exact sampler for {type(potential).__name__}")


@dataclass(frozen=True)
class HMCParams:
    leapfrog_steps: int
    step_size: float
    momentum_variance: float = 9.0
    inner_iterations: int = 5

    def __post_init__(self):
        if self.leapfrog_steps < 1 or self.inner_iterations < 1:
            raise InvalidInputError("leapfrog_steps and inner_iterations must be positive")
        if not (self.step_size > 0 and self.momentum_variance > 0):
            raise InvalidInputError("step_size and momentum_variance must be positive")

    @classmethod
    def for_dimension(cls, d: int) -> "HMCParams":
        """``L = floor(5 (2/d)^(1/4))``, ``eps = 1.2 (2/d)^(1/4)``, momentum variance 9, 5 iterations."""
        s = (2.0 / d) ** 0.25
        return cls(leapfrog_steps=max(1, math.floor(5.0 * s)), step_size=1.2 * s)


def leapfrog(potential: Potential, x, p, step_size: float, n_steps: int, momentum_variance: float):
    """Standard leapfrog for ``H = phi(x) + ||p||^2 / (2 m)``; works on batches."""
    x = np.array(x, dtype=float, copy=True)
    p = np.array(p, dtype=float, copy=True)
    with np.errstate(invalid="ignore", over="ignore"):
        p -= 0.5 * step_size * potential.grad(x)
        for i in range(n_steps):
            x += step_size * p / momentum_variance
            if i < n_steps - 1:
                p -= step_size * potential.grad(x)
        p -= 0.5 * step_size * potential.grad(x)
    return x, p


class HMCBackend(ProposalBackend):
    """Approximate sampler for ``pi``: a few HMC transitions from a fixed start.

    Every draw restarts at ``x_init`` so proposals stay independent of the
    IMHR chain. A transition whose energy error exceeds 1000 (or is NaN) is
    retried once with fresh momentum and then counted in ``flagged``.
    """

    kind = "hmc"

    def __init__(self, potential: Potential, params: HMCParams, x_init=None):
        super().__init__()
        self.potential = potential
        self.params = params
        self.dim = potential.dim
        self.x_init = np.zeros(self.dim) if x_init is None else np.asarray(x_init, dtype=float).reshape(self.dim)

    def _hamiltonian(self, x, p):
        return np.asarray(self.potential.value(x)) + 0.5 * np.sum(p * p, axis=-1) / self.params.momentum_variance

    def _transition(self, rng, x):
        prm = self.params
        p = math.sqrt(prm.momentum_variance) * rng.standard_normal(x.shape)
        log_u = np.log(rng.random(x.shape[0]))
        h0 = self._hamiltonian(x, p)
        xn, pn = leapfrog(self.potential, x, p, prm.step_size, prm.leapfrog_steps, prm.momentum_variance)
        with np.errstate(invalid="ignore", over="ignore"):
            h1 = self._hamiltonian(xn, pn)
            dh = h1 - h0
        # landing where the density vanishes is an ordinary rejection
        zero_density = np.isposinf(h1) & np.isfinite(h0)
        divergent = ~zero_density & (~np.isfinite(dh) | (np.abs(dh) > DIVERGENCE_THRESHOLD))
        accept = ~zero_density & ~divergent & (log_u <= -dh)
        return np.where(accept[:, None], xn, x), divergent

    def draw_batch(self, rng, n):
        x = np.tile(self.x_init, (n, 1))
        for _ in range(self.params.inner_iterations):
            x_new, divergent = self._transition(rng, x)
            if np.any(divergent):
                idx = np.flatnonzero(divergent)
                retry, still = self._transition(rng, x[idx])
                x_new[idx] = retry
                self._flag(np.count_nonzero(still))
            x = x_new
        return x


def hmc_backend(potential: Potential, params: HMCParams | None = None, x_init=None) -> HMCBackend:
    return HMCBackend(potential, params or HMCParams.for_dimension(potential.dim), x_init)


def perfect_security_backend(potential: PerfectSecurityPotential, params: HMCParams | None = None) -> HMCBackend:
    """HMC started at the origin with the dimension-scaled default parameters."""
    return HMCBackend(potential, params or HMCParams.for_dimension(potential.dim), np.zeros(potential.dim))


class RadialRejectionBackend(ProposalBackend):
    """Exact draws from the Perfect Security density by rejection.

    The envelope is a multivariate t with 2 degrees of freedom, whose tail
    ``r^-(d+2)`` is heavier than the target's ``r^-(d+3)``, so the density
    ratio is bounded. The bound is the ratio's maximum over a dense radial
    grid times a 5% safety factor.
    """

    kind = "rejection-radial"
    DOF = 2.0

    def __init__(self, potential: PerfectSecurityPotential, scale: float | None = None):
        super().__init__()
        if potential.truncate:
            raise InvalidInputError("rejection sampler expects the untruncated density")
        self.potential = potential
        self.dim = potential.dim
        self.scale = float(scale) if scale is not None else math.sqrt(potential.component_variance())
        r = np.concatenate([np.linspace(0.0, 200.0 * self.scale, 200_001)[1:], np.geomspace(200.0, 1e4, 20_000) * self.scale])
        pts = np.zeros((r.size, self.dim))
        pts[:, 0] = r
        with np.errstate(invalid="ignore", over="ignore"):
            lr = -np.asarray(potential.value(pts)) - self._log_envelope(pts)
        self.log_bound = float(np.nanmax(lr)) + math.log(1.05)

    def _log_envelope(self, x):
        q = np.sum(x * x, axis=-1) / (self.DOF * self.scale**2)
        return -0.5 * (self.DOF + self.dim) * np.log1p(q)

    def draw_batch(self, rng, n):
        out = np.empty((n, self.dim))
        filled = 0
        while filled < n:
            m = 2 * (n - filled) + 16
            z = rng.standard_normal((m, self.dim))
            w = rng.chisquare(self.DOF, m)
            x = self.scale * z / np.sqrt(w / self.DOF)[:, None]
            with np.errstate(invalid="ignore", over="ignore"):
                lr = -np.asarray(self.potential.value(x)) - self._log_envelope(x) - self.log_bound
            if np.any(lr > 0):
                self._flag(np.count_nonzero(lr > 0))
            keep = x[np.log(rng.random(m)) <= lr]
            k = min(keep.shape[0], n - filled)
            out[filled : filled + k] = keep[:k]
            filled += k
        return out
