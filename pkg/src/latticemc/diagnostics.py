"""Convergence and correctness measurements for lattice samplers.

Marginal pmfs and TVD, the replica-ensemble TVD_m pipeline, the uncentred
ACF, acceptance statistics and the analytic convergence bounds.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .densities import SigmoidTarget
from .lattice import InvalidInputError
from .samplers.backends import ProposalBackend
from .samplers.imhr import ChainState, imhr_ensemble
from .seeding import stream_rng, worker_count

__all__ = [
    "MarginalPMF",
    "TVDMCurve",
    "exact_marginal_isotropic",
    "marginals_from_samples",
    "tvd",
    "tvd_m_curve",
    "noise_floor",
    "acf",
    "average_acceptance",
    "isotropic_z_over_k",
    "uniform_ergodicity_bound",
    "inexact_alg_bound",
    "appendix_a_degeneracy_probe",
]

REPLICA_BLOCK = 4096


@dataclass(frozen=True)
class MarginalPMF:
    """pmf on the consecutive integers ``lo, lo+1, ..``."""

    lo: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidInputError("probs must be a non-empty vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidInputError("probs must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"probs sum to {p.sum():.12g}, not 1")
        object.__setattr__(self, "lo", int(self.lo))
        object.__setattr__(self, "probs", p)

    @property
    def hi(self) -> int:
        return self.lo + self.probs.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def __call__(self, z: int) -> float:
        return float(self.probs[z - self.lo]) if self.lo <= z <= self.hi else 0.0

    def std(self) -> float:
        z = self.support
        m = float(np.dot(z, self.probs))
        return math.sqrt(float(np.dot((z - m) ** 2, self.probs)))

    @classmethod
    def from_counts(cls, lo: int, counts) -> "MarginalPMF":
        c = np.asarray(counts, dtype=float)
        return cls(lo, c / c.sum())


@dataclass
class TVDMCurve:
    iterations: np.ndarray
    values: np.ndarray
    per_coordinate: np.ndarray | None = None
    accepts: int = 0
    out_of_window: int = 0

    def __post_init__(self):
        self.iterations = np.asarray(self.iterations, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0) or np.any(self.values > 1 + 1e-12):
            raise InvalidInputError("TVD values must lie in [0, 1]")


def exact_marginal_isotropic(sigma2: float, window: int, center: float = 0.0) -> MarginalPMF:
    """pmf proportional to ``exp(-(z - c)^2 / (2 sigma2))`` on ``[-W, W]`` (shifted by round(c))."""
    if not sigma2 > 0:
        raise InvalidInputError("sigma2 must be positive")
    sigma = math.sqrt(sigma2)
    if window < 8 * sigma:
        raise InvalidInputError(f"window {window} is below 8 sigma = {8 * sigma:.4g}")
    off = int(round(center))
    z = np.arange(off - window, off + window + 1, dtype=float)
    w = np.exp(-((z - center) ** 2) / (2.0 * sigma2))
    return MarginalPMF(off - window, w / w.sum())


def marginals_from_samples(samples) -> list[MarginalPMF]:
    """Empirical per-coordinate pmfs, e.g. from :func:`rwm_marginal_oracle` output."""
    s = np.asarray(samples, dtype=np.int64)
    out = []
    for col in s.T:
        lo = int(col.min())
        out.append(MarginalPMF.from_counts(lo, np.bincount(col - lo)))
    return out


def tvd(p: MarginalPMF, q: MarginalPMF) -> float:
    lo, hi = min(p.lo, q.lo), max(p.hi, q.hi)
    a = np.zeros(hi - lo + 1)
    b = np.zeros(hi - lo + 1)
    a[p.lo - lo : p.hi - lo + 1] = p.probs
    b[q.lo - lo : q.hi - lo + 1] = q.probs
    return float(min(1.0, 0.5 * np.abs(a - b).sum()))


def _windows(oracle: Sequence[MarginalPMF], x0: np.ndarray):
    lo = np.empty(len(oracle), dtype=np.int64)
    hi = np.empty(len(oracle), dtype=np.int64)
    for i, pmf in enumerate(oracle):
        mid = int(round(float(np.dot(pmf.support, pmf.probs))))
        r = int(math.ceil(8.0 * pmf.std() + abs(x0[i])))
        lo[i], hi[i] = mid - r, mid + r
    return lo, hi


def _histogram(states: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Per-coordinate counts over ``[lo_i, hi_i]``, out-of-window values clipped to the edges."""
    width = int((hi - lo).max()) + 1
    clipped = np.clip(states, lo, hi)
    outside = int(np.count_nonzero(clipped != states))
    idx = (clipped - lo) + np.arange(states.shape[1]) * width
    counts = np.bincount(idx.ravel(), minlength=width * states.shape[1])
    return counts.reshape(states.shape[1], width), outside


def tvd_m_curve(
    target: SigmoidTarget,
    backend: ProposalBackend,
    x0,
    replicas: int,
    t_values: Sequence[int],
    oracle: Sequence[MarginalPMF],
    seed: int = 0,
    threads: int | None = None,
) -> TVDMCurve:
    """Maximum marginal TVD after ``t`` IMHR iterations, estimated over ``replicas`` chains.

    Replicas run in blocks of ``REPLICA_BLOCK`` chains; block ``k`` draws from
    stream ``k`` of ``seed``. Histogram counts are summed as integers, so the
    result is identical for every thread count.
    """
    d = target.dim
    x0 = np.asarray(x0, dtype=float).reshape(d)
    if len(oracle) != d:
        raise InvalidInputError(f"oracle covers {len(oracle)} coordinates, target has {d}")
    if replicas < 1:
        raise InvalidInputError("replicas must be positive")
    ts = sorted(set(int(t) for t in t_values))
    lo, hi = _windows(oracle, x0)
    width = int((hi - lo).max()) + 1
    n_blocks = -(-replicas // REPLICA_BLOCK)

    def work(k):
        n = min(REPLICA_BLOCK, replicas - k * REPLICA_BLOCK)
        snaps, acc = imhr_ensemble(target, backend, x0, n, ts, stream_rng(seed, k))
        hists, outside = {}, 0
        for t in ts:
            hists[t], o = _histogram(snaps[t], lo, hi)
            outside += o
        return hists, acc, outside

    counts = {t: np.zeros((d, width), dtype=np.int64) for t in ts}
    accepts = outside = 0
    with ThreadPoolExecutor(max_workers=threads or worker_count()) as pool:
        for hists, acc, o in pool.map(work, range(n_blocks)):
            for t in ts:
                counts[t] += hists[t]
            accepts += acc
            outside += o
    per_coord = np.empty((len(ts), d))
    for j, t in enumerate(ts):
        for i in range(d):
            c = counts[t][i, : hi[i] - lo[i] + 1]
            per_coord[j, i] = tvd(MarginalPMF.from_counts(int(lo[i]), c), oracle[i])
    return TVDMCurve(np.array(ts), per_coord.max(axis=1), per_coord, accepts, outside)


def noise_floor(oracle: Sequence[MarginalPMF], replicas: int) -> float:
    """``max_i sqrt(S_i / replicas)`` with ``S_i`` the oracle support size."""
    return max(math.sqrt(p.probs.size / replicas) for p in oracle)


def acf(series, max_lag: int) -> np.ndarray:
    """Uncentred autocorrelation ``sum_t x_t.x_{t+tau} / sum_t x_t.x_t`` for ``tau = 0..max_lag``."""
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if max_lag < 1 or n <= max_lag:
        raise InvalidInputError("need 1 <= max_lag < number of samples")
    denom = float(np.einsum("ij,ij->", x, x))
    if denom == 0.0:
        raise ZeroDivisionError("ACF of an all-zero series is undefined")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for tau in range(1, max_lag + 1):
        out[tau] = float(np.einsum("ij,ij->", x[:-tau], x[tau:])) / denom
    return out


def average_acceptance(state: ChainState) -> float:
    if state.steps < 1:
        raise InvalidInputError("no steps taken yet")
    return state.accepts / state.steps


def isotropic_z_over_k(sigma2: float, d: int, window: int = 10) -> float:
    """``Z/K`` for an isotropic Gaussian: truncated lattice sum over the closed-form integral."""
    z = np.arange(-window, window + 1, dtype=float)
    z1 = float(np.exp(-(z**2) / (2.0 * sigma2)).sum())
    k1 = math.sqrt(2.0 * math.pi * sigma2)
    return (z1 / k1) ** d


def uniform_ergodicity_bound(L: float, d: int, Z_over_K: float, t: int) -> float:
    """``(1 - delta)^t`` with ``delta = (Z/K) exp(-d L / 8)``."""
    if not (L > 0 and d > 0 and Z_over_K > 0) or t < 0:
        raise InvalidInputError("L, d, Z_over_K must be positive and t non-negative")
    delta = Z_over_K * math.exp(-d * L / 8.0)
    if delta > 1.0:
        raise InvalidInputError(f"delta = {delta:.6g} exceeds 1; inputs are inconsistent")
    return min(1.0, max(0.0, (1.0 - delta) ** t))


def inexact_alg_bound(V: float, rho: float, n: int, delta: float, k: int):
    """TVD bound with an approximate proposal sampler, over the admissible range of ``C``.

    ``C`` ranges over ``[1 - r, 1 + r]`` with ``r = 2 V rho^n / delta``; the
    bound ``(1 - C delta)^k + (1 + 1/(C delta)) V rho^n / delta`` is returned
    at both ends as ``(lower, upper)``.
    """
    if V < 0 or not (0 < rho < 1) or n < 1 or not (0 < delta <= 1) or k < 0:
        raise InvalidInputError("need V >= 0, 0 < rho < 1, n >= 1, 0 < delta <= 1, k >= 0")
    eps = V * rho**n
    r = 2.0 * eps / delta
    if r >= 1.0:
        raise InvalidInputError(f"bound is vacuous: 2 V rho^n / delta = {r:.6g} >= 1")

    def bound(c):
        return (1.0 - c * delta) ** k + (1.0 + 1.0 / (c * delta)) * eps / delta

    a, b = bound(1.0 - r), bound(1.0 + r)
    return (min(a, b), max(a, b))


def appendix_a_degeneracy_probe(sigma2: float = 0.5, window_max: int = 10, grid_step: float = 1e-3) -> np.ndarray:
    """Grid infimum of ``pi(x) / pi(round(x))`` on the cell around each ``m = 0..window_max``.

    For a centred 1-D Gaussian, with ``x = m + y`` and ``y`` in ``[-1/2, 1/2)``
    the ratio is ``exp(-(2 m y + y^2) / (2 sigma2))``; its infimum tends to 0,
    so the piecewise-constant target has no positive lower bound on the ratio.
    ``sigma2 = 1/2`` gives the density ``exp(-x^2)``.
    """
    if not sigma2 > 0 or window_max < 0:
        raise InvalidInputError("sigma2 must be positive and window_max non-negative")
    n = int(round(1.0 / grid_step))
    y = -0.5 + grid_step * np.arange(n)
    m = np.arange(window_max + 1, dtype=float)[:, None]
    log_ratio = -(2.0 * m * y + y * y) / (2.0 * sigma2)
    return np.exp(log_ratio.min(axis=1))
