"""Lattice bases, coordinate-wise rounding and the embedded Leech basis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GeneratorMatrix",
    "round_nearest",
    "lattice_map",
    "leech_generator",
    "load_generator",
    "LEECH_INTEGER_ROWS",
]

RANK_TOL = 1e-12


class InvalidInputError(ValueError):
    """Raised for non-finite or mis-shaped numerical input."""


@dataclass(frozen=True)
class GeneratorMatrix:
    """Full-rank square basis ``B`` of the lattice ``B Z^d`` (columns are basis vectors)."""

    entries: np.ndarray
    abs_det: float = field(init=False)

    def __post_init__(self):
        b = np.array(self.entries, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
            raise InvalidInputError(f"generator matrix must be square and non-empty, got shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise InvalidInputError("generator matrix has non-finite entries")
        sv = np.linalg.svd(b, compute_uv=False)
        if sv[-1] <= RANK_TOL * sv[0]:
            raise InvalidInputError("generator matrix is rank deficient")
        # slogdet goes through LAPACK getrf (LU with partial pivoting)
        _, logdet = np.linalg.slogdet(b)
        b.setflags(write=False)
        object.__setattr__(self, "entries", b)
        object.__setattr__(self, "abs_det", float(math.exp(logdet)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, d: int) -> "GeneratorMatrix":
        return cls(np.eye(d))

    @classmethod
    def diagonal(cls, diag) -> "GeneratorMatrix":
        return cls(np.diag(np.asarray(diag, dtype=float)))

    def gram_max_eigenvalue(self) -> float:
        """Largest eigenvalue of ``B^T B``."""
        return float(np.linalg.eigvalsh(self.entries.T @ self.entries)[-1])


def round_nearest(x) -> np.ndarray:
    """Coordinate-wise nearest integer, ties rounded away from zero.

    Works on any array shape; returns ``int64``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("cannot round non-finite coordinates")
    f = np.floor(x)
    frac = x - f
    up = (frac > 0.5) | ((frac == 0.5) & (x > 0))
    return (f + up).astype(np.int64)


def round_nearest_float(x: np.ndarray) -> np.ndarray:
    """Same rule as :func:`round_nearest` but float-valued and NaN-tolerant.

    Used on hot paths where the caller screens non-finite values itself.
    """
    f = np.floor(x)
    frac = x - f
    return f + ((frac > 0.5) | ((frac == 0.5) & (x > 0)))


def lattice_map(B: GeneratorMatrix, z) -> np.ndarray:
    """Return the lattice point ``B z`` (``z`` may be a batch with last axis ``d``)."""
    z = np.asarray(z)
    if z.shape[-1] != B.dim:
        raise InvalidInputError(f"dimension mismatch: basis is {B.dim}-dimensional, point has {z.shape[-1]}")
    return z @ B.entries.T


# Rows of the Leech basis before the common 1/sqrt(8) scale.
LEECH_INTEGER_ROWS = (
    (8, 4, 4, 4, 4, 4, 4, 2, 4, 4, 4, 2, 4, 2, 2, 2, 4, 2, 2, 2, 0, 0, 0, -3),
    (0, 4, 0, 0, 0, 0, 0, 2, 0, 0, 0, 2, 0, 2, 0, 0, 0, 0, 0, 2, 2, 0, 0, 1),
    (0, 0, 4, 0, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 2, 0, 0, 2, 0, 0, 2, 0, 0, 1),
    (0, 0, 0, 4, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 2, 0, 2, 0, 0, 1),
    (0, 0, 0, 0, 4, 0, 0, 2, 0, 0, 0, 0, 0, 2, 2, 2, 0, 2, 2, 2, 2, 0, 0, 1),
    (0, 0, 0, 0, 0, 4, 0, 2, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 2, 0, 0, 0, 0, 1),
    (0, 0, 0, 0, 0, 0, 4, 2, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 2, 0, 0, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 2, 0, 2, 0, 0, 0, 0, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 4, 0, 0, 2, 0, 2, 2, 2, 0, 2, 2, 2, 2, 2, 2, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 4, 0, 2, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 4, 2, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 4, 2, 2, 2, 0, 0, 0, 0, 2, 2, 2, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 2, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 2, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 4, 2, 2, 2, 2, 2, 2, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 2, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 2, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 2, 2, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1),
)
LEECH_SCALE = 1.0 / math.sqrt(8.0)


def leech_generator() -> GeneratorMatrix:
    """Upper-triangular 24x24 basis of the Leech lattice (unit determinant)."""
    return GeneratorMatrix(np.array(LEECH_INTEGER_ROWS, dtype=float) * LEECH_SCALE)


def load_generator(path) -> GeneratorMatrix:
    """Read a basis from text: first line ``d``, then ``d`` rows of ``d`` reals."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InvalidInputError(f"{path}: empty generator file")
    try:
        d = int(lines[0][0])
    except ValueError:
        raise InvalidInputError(f"{path}: first line must be the dimension, got {lines[0]!r}") from None
    rows = lines[1:]
    if len(lines[0]) != 1 or d <= 0 or len(rows) != d or any(len(r) != d for r in rows):
        raise InvalidInputError(f"{path}: expected {d} rows of {d} values")
    try:
        return GeneratorMatrix(np.array([[float(v) for v in r] for r in rows]))
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
