"""Portable seeded noise: splitmix64, one output per cell in row-major order."""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of splitmix64 started from ``seed`` (uint64).

    ``x_k = seed + k * 0x9E3779B97F4A7C15`` for k = 1..n, then
    ``z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9``,
    ``z = (z ^ (z >> 27)) * 0x94D049BB133111EB``, ``z ^ (z >> 31)``,
    all modulo 2**64.
    """
    with np.errstate(over="ignore"):
        k = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(seed & MASK64) + k * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
        return z ^ (z >> np.uint64(31))


def uniform(seed: int, shape) -> np.ndarray:
    """Doubles in [0, 1) from the top 53 bits of each output."""
    n = int(np.prod(shape))
    bits = splitmix64(seed, n) >> np.uint64(11)
    return (bits.astype(np.float64) * 2.0 ** -53).reshape(shape)


def symmetric_noise(seed: int, shape, amplitude: float) -> np.ndarray:
    """``amplitude * (2 U - 1)``, values in [-amplitude, amplitude)."""
    return amplitude * (2.0 * uniform(seed, shape) - 1.0)
