"""Sample streams on disk: CSV and the compact LSMP binary format.

LSMP layout (little-endian): magic ``b"LSMP"``, version ``u32``, ``d`` ``u32``,
count ``u64``, then ``count * d`` signed 64-bit integers in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..lattice import InvalidInputError

__all__ = ["write_samples_csv", "read_samples_csv", "write_lsmp", "read_lsmp", "LSMP_MAGIC", "LSMP_VERSION"]

LSMP_MAGIC = b"LSMP"
LSMP_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


def _as_samples(samples) -> np.ndarray:
    a = np.asarray(samples)
    if a.ndim != 2:
        raise InvalidInputError(f"samples must be a 2-D array, got shape {a.shape}")
    if not np.issubdtype(a.dtype, np.integer):
        raise InvalidInputError("samples must hold integers")
    return a.astype(np.int64, copy=False)


def write_samples_csv(fh, samples, metadata: dict | None = None):
    """One row per sample; optional ``# key=value`` lines first."""
    a = _as_samples(samples)
    for k, v in (metadata or {}).items():
        fh.write(f"# {k}={v}\n")
    fh.write(",".join(f"z{i}" for i in range(a.shape[1])) + "\n")
    for row in a:
        fh.write(",".join(map(str, row.tolist())) + "\n")


def read_samples_csv(path) -> np.ndarray:
    rows = []
    header_seen = False
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if not header_seen:
            header_seen = True
            continue
        rows.append([int(v) for v in line.split(",")])
    return np.array(rows, dtype=np.int64)


def write_lsmp(fh, samples):
    a = _as_samples(samples)
    fh.write(_HEADER.pack(LSMP_MAGIC, LSMP_VERSION, a.shape[1], a.shape[0]))
    fh.write(np.ascontiguousarray(a, dtype="<i8").tobytes())


def read_lsmp(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidInputError("truncated LSMP header")
    magic, version, d, count = _HEADER.unpack_from(raw)
    if magic != LSMP_MAGIC:
        raise InvalidInputError(f"bad magic {magic!r}")
    if version != LSMP_VERSION:
        raise InvalidInputError(f"unsupported LSMP version {version}")
    body = raw[_HEADER.size :]
    if len(body) != 8 * d * count:
        raise InvalidInputError(f"LSMP body holds {len(body)} bytes, expected {8 * d * count}")
    return np.frombuffer(body, dtype="<i8").reshape(count, d).astype(np.int64)
