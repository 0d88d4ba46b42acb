"""Random-walk Metropolis oracle for lattice marginals of non-product targets.

Each output sample restarts from ``x0`` and runs a fixed number of RWM
iterations whose acceptance only looks at the rounded states, so the chain
targets the lattice pmf directly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..densities import Potential
from ..lattice import InvalidInputError, round_nearest, round_nearest_float
from ..seeding import stream_rng, worker_count

__all__ = ["rwm_marginal_oracle"]

BLOCK = 4096


def _block(potential, chol, x0, n, iterations, rng):
    d = x0.shape[0]
    x = np.tile(x0, (n, 1))
    with np.errstate(invalid="ignore", over="ignore"):
        phi_x = np.asarray(potential.value(round_nearest_float(x)), dtype=float)
    for _ in range(iterations):
        y = x + rng.standard_normal((n, d)) @ chol.T
        log_u = np.log1p(-rng.random(n))
        with np.errstate(invalid="ignore", over="ignore"):
            phi_y = np.asarray(potential.value(round_nearest_float(y)), dtype=float)
            acc = log_u <= phi_x - phi_y
        acc &= np.isfinite(phi_y)
        x[acc] = y[acc]
        phi_x[acc] = phi_y[acc]
    return round_nearest(x)


def rwm_marginal_oracle(
    potential: Potential,
    cov,
    x0,
    n_samples: int = 200_000,
    seed: int = 0,
    iterations: int = 500,
    threads: int | None = None,
) -> np.ndarray:
    """``(n_samples, d)`` int64 lattice samples, each the end of its own RWM run.

    Block ``k`` of ``BLOCK`` samples uses stream ``k`` of ``seed``, so the
    output does not depend on the thread count.
    """
    d = potential.dim
    x0 = np.asarray(x0, dtype=float).reshape(d)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (d, d) or not np.allclose(cov, cov.T):
        raise InvalidInputError("proposal covariance must be a symmetric d x d matrix")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InvalidInputError("proposal covariance is not positive definite") from None
    if n_samples < 1 or iterations < 0:
        raise InvalidInputError("n_samples must be positive and iterations non-negative")
    starts = list(range(0, n_samples, BLOCK))

    def work(k):
        n = min(BLOCK, n_samples - starts[k])
        return _block(potential, chol, x0, n, iterations, stream_rng(seed, k))

    with ThreadPoolExecutor(max_workers=threads or worker_count()) as pool:
        parts = list(pool.map(work, range(len(starts))))
    return np.concatenate(parts, axis=0)
