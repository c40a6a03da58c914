"""Seed derivation for reproducible parallel replicas.

Replica streams are counter-based (Philox) and keyed by a splitmix64 mix of
(seed, replica), so replica k's stream is fixed regardless of how many other
replicas run or in what order.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step; the standard 64-bit finalizer-style mixer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix(seed: int, replica: int) -> int:
    """Derive the 64-bit key for a replica: mix(mix(seed) xor mix-step(replica))."""
    return splitmix64(splitmix64(seed & _MASK64) ^ (replica & _MASK64))


def generator(seed: int, replica: int = 0) -> np.random.Generator:
    """Counter-based generator for one (seed, replica) pair."""
    return np.random.Generator(np.random.Philox(key=mix(seed, replica)))
