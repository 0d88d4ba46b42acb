"""Klein's randomized nearest-plane sampler and the 1-D discrete Gaussian."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..lattice import GeneratorMatrix, InvalidInputError

__all__ = [
    "gram_schmidt",
    "KleinParams",
    "klein_sample",
    "klein_sample_batch",
    "DiscreteGaussianTable",
    "discrete_gaussian_1d",
]

MIN_SIGMA = 1e-6
TAIL = 12.0


def gram_schmidt(basis: np.ndarray):
    """Gram-Schmidt on the columns of ``basis``.

    Returns ``(gso, mu)``: ``gso[:, i]`` is the component of column ``i``
    orthogonal to columns ``0..i-1`` and ``mu[i, j] = <b_i, gso_j>/||gso_j||^2``.
    """
    b = np.asarray(basis, dtype=float)
    q, r = np.linalg.qr(b)
    diag = np.diag(r)
    gso = q * diag
    mu = (r / diag[:, None]).T
    return gso, mu


@dataclass(frozen=True)
class KleinParams:
    basis: GeneratorMatrix
    sigma: float
    center: np.ndarray = None
    gso: np.ndarray = field(init=False, repr=False)
    mu: np.ndarray = field(init=False, repr=False)
    gso_sqnorm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.basis.dim
        c = np.zeros(d) if self.center is None else np.asarray(self.center, dtype=float).reshape(d)
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("center must be finite")
        if not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        gso, mu = gram_schmidt(self.basis.entries)
        sq = np.einsum("ij,ij->j", gso, gso)
        if np.min(self.sigma / np.sqrt(sq)) < MIN_SIGMA:
            raise InvalidInputError("conditional sigma below 1e-6; sampling would be degenerate")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "gso", gso)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gso_sqnorm", sq)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def conditional_sigmas(self) -> np.ndarray:
        return self.sigma / np.sqrt(self.gso_sqnorm)


def klein_sample_batch(params: KleinParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` coefficient vectors ``z`` with ``B z`` distributed as the lattice Gaussian."""
    u = rng.random((n, params.dim))
    return kernels.klein_batch(
        np.ascontiguousarray(params.basis.entries.T),
        np.ascontiguousarray(params.gso.T),
        np.ascontiguousarray(params.gso_sqnorm),
        np.ascontiguousarray(params.center),
        float(params.sigma),
        u,
    )


def klein_sample(params: KleinParams, rng: np.random.Generator) -> np.ndarray:
    return klein_sample_batch(params, rng, 1)[0]


class DiscreteGaussianTable:
    """Inverse-CDF table for ``P(z) ~ exp(-(z-c)^2/(2 s^2))`` on ``[c-12s, c+12s]`` plus the nearest integer."""

    def __init__(self, center: float, sigma: float):
        if not (math.isfinite(center) and math.isfinite(sigma)) or sigma < MIN_SIGMA:
            raise InvalidInputError(f"need finite center and sigma >= {MIN_SIGMA}")
        self.center = float(center)
        self.sigma = float(sigma)
        # the nearest integer always belongs to the support and carries weight 1
        near = math.floor(center + 0.5)
        self.lo = min(math.ceil(center - TAIL * sigma), near)
        hi = max(math.floor(center + TAIL * sigma), near)
        z = np.arange(self.lo, hi + 1, dtype=float)
        w = np.exp(-((z - center) ** 2 - (near - center) ** 2) / (2.0 * sigma * sigma))
        self.cdf = np.cumsum(w)
        self.cdf /= self.cdf[-1]

    def matches(self, center: float, sigma: float) -> bool:
        return abs(center - self.center) <= 1e-12 and abs(sigma - self.sigma) <= 1e-12

    def pmf(self) -> np.ndarray:
        return np.diff(self.cdf, prepend=0.0)

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        idx = np.searchsorted(self.cdf, u, side="right")
        out = self.lo + np.minimum(idx, len(self.cdf) - 1)
        return int(out) if size is None else out.astype(np.int64)


_last_table: DiscreteGaussianTable | None = None


def discrete_gaussian_1d(center: float, sigma: float, rng: np.random.Generator, size=None):
    """Exact (to truncation below 1e-30) 1-D discrete Gaussian draw(s)."""
    global _last_table
    table = _last_table
    if table is None or not table.matches(center, sigma):
        table = DiscreteGaussianTable(center, sigma)
        _last_table = table
    return table.sample(rng, size)
