"""Counter-based deterministic random streams (SplitMix64).

The generator is the SplitMix64 finalizer applied to an affine counter:
value k of a stream is mix(stream_seed + (k + 1) * GOLDEN) where GOLDEN is
the 64-bit golden-ratio constant and mix is the standard SplitMix64 output
permutation. Streams are addressable by (seed, name), and any index range
can be produced without generating predecessors, so chunked generation is
bit-identical to one-shot generation.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

_U53 = np.float64(2.0**-53)


def mix64(x: int) -> int:
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def _mix64_array(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= np.uint64(_M1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_M2)
    x ^= x >> np.uint64(31)
    return x


def stream_key(name: str) -> int:
    """Stable 64-bit key for a stream name."""
    digest = hashlib.blake2b(name.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class Stream:
    """One named random stream derived from (seed, name)."""

    def __init__(self, seed: int, name: str):
        self.seed = mix64((seed & MASK64) ^ stream_key(name))
        self.name = name

    def bits(self, start: int, count: int) -> np.ndarray:
        """Raw uint64 values for indices [start, start + count)."""
        counter = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        counter *= np.uint64(GOLDEN)
        counter += np.uint64(self.seed)
        return _mix64_array(counter)

    def bit(self, index: int) -> int:
        return mix64((self.seed + (index + 1) * GOLDEN) & MASK64)

    def uniform(self, start: int, count: int) -> np.ndarray:
        """float64 in [0, 1)."""
        return (self.bits(start, count) >> np.uint64(11)).astype(np.float64) * _U53

    def uniform_open(self, start: int, count: int) -> np.ndarray:
        """float64 in (0, 1]; safe as a logarithm argument."""
        u = (self.bits(start, count) >> np.uint64(11)).astype(np.float64)
        return (u + 1.0) * _U53

    def integers(self, start: int, count: int, bound: int) -> np.ndarray:
        """int64 in [0, bound). Modulo reduction; bias is negligible for bound << 2^64."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return (self.bits(start, count) % np.uint64(bound)).astype(np.int64)

    def integer(self, index: int, bound: int) -> int:
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return self.bit(index) % bound


def normals(seed: int, name: str, start: int, count: int) -> np.ndarray:
    """Standard normals via Box-Muller over two parallel uniform streams."""
    u1 = Stream(seed, name + "/u1").uniform_open(start, count)
    u2 = Stream(seed, name + "/u2").uniform(start, count)
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos((2.0 * math.pi) * u2)
