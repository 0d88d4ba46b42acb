"""Independent Metropolis-Hastings with rounding (IMHR).

Proposals come from a backend sampling the continuous density ``pi``; the
chain targets the piecewise-sigmoid density ``pibar`` and every emitted
state is rounded coordinate-wise, which yields the lattice pmf exactly at
stationarity.

Because proposals never depend on the current state, the acceptance test
only needs the log importance weight ``w(x) = log pibar(x) - log pi(x)``:
accept ``y`` iff ``log u <= min(0, w(y) - w(x))``. Long runs therefore
evaluate ``w`` on whole batches of proposals with numpy and leave only the
scalar accept/reject recursion to :func:`latticemc.kernels.imh_select`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .. import kernels
from ..densities import SigmoidTarget
from ..lattice import InvalidInputError, round_nearest
from .backends import ProposalBackend

__all__ = ["ChainState", "ChainRun", "imhr_step", "imhr_run", "imhr_ensemble"]

CHUNK = 1 << 16


@dataclass
class ChainState:
    """Current point of one chain with its counters and generator."""

    x: np.ndarray
    rng: np.random.Generator
    steps: int = 0
    accepts: int = 0
    flagged: int = 0
    log_weight: Optional[float] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if not np.all(np.isfinite(self.x)):
            raise InvalidInputError("chain state must be finite")

    @classmethod
    def start(cls, x0, seed=0) -> "ChainState":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(np.array(x0, dtype=float), rng)


@dataclass
class ChainRun:
    samples: np.ndarray
    state: ChainState


def _check_dims(backend: ProposalBackend, target: SigmoidTarget, x):
    if backend.dim != target.dim or np.shape(x)[-1] != target.dim:
        raise InvalidInputError(
            f"dimension mismatch: backend {backend.dim}, target {target.dim}, state {np.shape(x)[-1]}"
        )


def _weights(target: SigmoidTarget, y: np.ndarray):
    """Log weights with non-finite entries replaced by NaN (always rejected)."""
    with np.errstate(invalid="ignore", over="ignore"):
        w = np.asarray(target.log_weight(y), dtype=float)
    bad = ~np.isfinite(w)
    return np.where(bad, np.nan, w), bad


def imhr_step(state: ChainState, backend: ProposalBackend, target: SigmoidTarget):
    """One IMHR transition. Returns ``(new_state, accepted)``."""
    _check_dims(backend, target, state.x)
    lw_x = state.log_weight
    if lw_x is None:
        lw_x = float(target.log_weight(state.x))
    y = backend.draw(state.rng)
    lw_y, bad = _weights(target, y[None, :])
    lw_y, bad = float(lw_y[0]), bool(bad[0])
    u = state.rng.random()
    log_u = math.log(u) if u > 0.0 else -math.inf
    diff = lw_y - lw_x
    accepted = (not bad) and diff == diff and log_u <= min(0.0, diff)
    return (
        replace(
            state,
            x=y if accepted else state.x,
            steps=state.steps + 1,
            accepts=state.accepts + int(accepted),
            flagged=state.flagged + int(bad),
            log_weight=lw_y if accepted else lw_x,
        ),
        accepted,
    )


def imhr_run(
    target: SigmoidTarget,
    backend: ProposalBackend,
    x0,
    burn_in: int,
    n_samples: int,
    thin: int = 1,
    seed=0,
) -> ChainRun:
    """Run ``burn_in`` steps, then emit the rounded state every ``thin`` steps.

    Args:
        seed: integer seed or an existing ``numpy.random.Generator``.

    Returns:
        :class:`ChainRun` with an ``(n_samples, d)`` int64 array and the final
        chain state (step/accept/flag counters).
    """
    if burn_in < 0 or n_samples < 1 or thin < 1:
        raise InvalidInputError("need burn_in >= 0, n_samples >= 1 and thin >= 1")
    state = ChainState.start(x0, seed)
    _check_dims(backend, target, state.x)
    d = target.dim
    lw = float(target.log_weight(state.x))
    x = state.x
    total = burn_in + n_samples * thin
    out = np.empty((n_samples, d), dtype=np.int64)
    n_out = 0
    done = 0
    accepts = flagged = 0
    rng = state.rng
    while done < total:
        m = min(CHUNK, total - done)
        y = np.asarray(backend.draw_batch(rng, m), dtype=float)
        w, bad = _weights(target, y)
        with np.errstate(divide="ignore"):
            log_u = np.log(rng.random(m))
        idx, acc = kernels.imh_select(w, log_u, lw)
        accepts += int(acc)
        flagged += int(np.count_nonzero(bad))
        # global step numbers (1-based) of this chunk that produce output
        steps = np.arange(done + 1, done + m + 1)
        emit = (steps > burn_in) & ((steps - burn_in) % thin == 0)
        if np.any(emit):
            sel = idx[emit]
            pts = np.where((sel >= 0)[:, None], y[np.maximum(sel, 0)], x)
            k = pts.shape[0]
            out[n_out : n_out + k] = round_nearest(pts)
            n_out += k
        if idx[-1] >= 0:
            x = y[idx[-1]]
            lw = float(w[idx[-1]])
        done += m
    final = replace(state, x=np.array(x), steps=total, accepts=accepts, flagged=flagged, log_weight=lw)
    return ChainRun(out, final)


def imhr_ensemble(
    target: SigmoidTarget,
    backend: ProposalBackend,
    x0,
    n_chains: int,
    record_at: Sequence[int],
    rng: np.random.Generator,
    continuous: bool = False,
):
    """Run ``n_chains`` independent chains side by side from ``x0``.

    Returns:
        ``(snapshots, accepts)`` where ``snapshots[t]`` is the ``(n_chains, d)``
        array of rounded states after ``t`` iterations (the raw states when
        ``continuous``) for every ``t`` in ``record_at``.
    """
    record = sorted(set(int(t) for t in record_at))
    if not record or record[0] < 0:
        raise InvalidInputError("record_at must hold non-negative iteration counts")
    x = np.tile(np.asarray(x0, dtype=float), (n_chains, 1))
    _check_dims(backend, target, x)
    with np.errstate(invalid="ignore", over="ignore"):
        lw = np.asarray(target.log_weight(x), dtype=float)
    snapshots = {}
    accepts = 0
    pos = 0
    for t in range(record[-1] + 1):
        if t > 0:
            y = np.asarray(backend.draw_batch(rng, n_chains), dtype=float)
            w, _ = _weights(target, y)
            with np.errstate(invalid="ignore", divide="ignore"):
                log_u = np.log(rng.random(n_chains))
                acc = log_u <= np.minimum(0.0, w - lw)
            x[acc] = y[acc]
            lw[acc] = w[acc]
            accepts += int(np.count_nonzero(acc))
        if t == record[pos]:
            snapshots[t] = x.copy() if continuous else round_nearest(x)
            pos += 1
    return snapshots, accepts
