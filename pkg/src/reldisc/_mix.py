"""Counter-based 64-bit mixing (splitmix64 finalizer).

Constants: increment 0x9E3779B97F4A7C15, multipliers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB, shifts 30, 27, 31.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
M1 = 0xBF58476D1CE4E5B9
M2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * M1) & MASK64
    z = ((z ^ (z >> 27)) * M2) & MASK64
    return z ^ (z >> 31)


def mix(*words: int) -> int:
    """Fold a sequence of integers into one 64-bit value."""
    h = 0
    for w in words:
        h = splitmix64(h ^ (int(w) & MASK64))
    return h


def uniform_stream(seed: int, ids: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) draws keyed by (seed, id); independent of evaluation order."""
    ids = np.asarray(ids, dtype=np.uint64)
    base = np.uint64(splitmix64(int(seed) & MASK64))
    with np.errstate(over="ignore"):
        z = (ids ^ base) + np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(M2)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
