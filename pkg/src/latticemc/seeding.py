"""Derivation of independent random streams from one 64-bit master seed.

Stream ``k`` of master seed ``s`` is a PCG64 generator seeded with
``splitmix64((s + k) mod 2**64)``. Work split into fixed-size blocks uses
the block index as ``k``, so results never depend on the worker count.
"""

import os

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the splitmix64 finaliser."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_seed(master: int, index: int) -> int:
    return splitmix64((int(master) + int(index)) & MASK64)


def stream_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(stream_seed(master, index))


def worker_count(default: int | None = None) -> int:
    """Thread cap from ``LS_THREADS`` (defaults to the CPU count)."""
    raw = os.environ.get("LS_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"LS_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"LS_THREADS must be a positive integer, got {raw!r}")
        return n
    return default or os.cpu_count() or 1
