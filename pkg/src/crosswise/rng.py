"""Counter-based deterministic random number generation.

Every random draw in this library comes from one fixed generator so that any
reimplementation (in any language) can reproduce the exact streams.  The
generator maps a triple (seed, stream, counter) to a 64-bit word:

    key(seed, stream) = mix64(mix64(seed) XOR (stream * 0xD2B74407B1CE6E93 mod 2^64))
    word(seed, stream, counter) = mix64(key + counter * 0x9E3779B97F4A7C15 mod 2^64)

where mix64 is the SplitMix64 finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9   (mod 2^64)
    z ^= z >> 27;  z *= 0x94D049BB133111EB   (mod 2^64)
    z ^= z >> 31

All arithmetic is modulo 2^64.  The word stream is the portable contract;
derived floating-point draws use the fixed conversions below:

* uniform in [0, 1):   (word >> 11) * 2^-53
* standard normal:     Box-Muller on word pairs; for a batch of n normals,
  2*ceil(n/2) words are consumed: the first half give u1 = ((w >> 11)+1)*2^-53
  in (0, 1], the second half give u2 = (w >> 11)*2^-53 in [0, 1), and the
  output is [r*cos(2*pi*u2) for all pairs] followed by [r*sin(2*pi*u2)],
  r = sqrt(-2 ln u1), truncated to n values.
* sign flip (+1/-1):   +1.0 if bit 0 of the word is set, else -1.0
* integer in [lo, hi): lo + word mod (hi - lo)   (modulo bias is negligible
  for the ranges used here, all far below 2^32)
* permutation of n:    Fisher-Yates from the top, j = word mod (i + 1),
  consuming n - 1 words.

`CounterRng` is a thin stateful cursor over the stream; equal (seed, stream)
always replays the same sequence regardless of how draws are batched into
words()/uniform()/normal() calls of the same sizes.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD2B74407B1CE6E93
_DERIVE_SALT = 0xA24BAED4963EE407

_U64_GOLDEN = np.uint64(_GOLDEN)
_INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> int:
    return mix64(mix64(seed & _MASK64) ^ ((stream * _STREAM_SALT) & _MASK64))


def word_at(seed: int, stream: int, counter: int) -> int:
    """Reference (scalar) form of the generator; words() must match it."""
    return mix64((stream_key(seed, stream) + counter * _GOLDEN) & _MASK64)


def derive_seed(seed: int, label: int) -> int:
    """Child seed for component `label` of a composite sampler (e.g. block i)."""
    return mix64(mix64(seed & _MASK64) ^ ((label * _DERIVE_SALT) & _MASK64) ^ _GOLDEN)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class CounterRng:
    """Sequential cursor over the (seed, stream) word stream."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = seed
        self.stream = stream
        self._key = np.uint64(stream_key(seed, stream))
        self._counter = 0

    def words(self, count: int) -> np.ndarray:
        """Next `count` 64-bit words as a uint64 array."""
        if count < 0:
            raise ValueError(f"word count must be >= 0, got {count}")
        counters = np.arange(self._counter, self._counter + count, dtype=np.uint64)
        self._counter += count
        return _mix64_array(self._key + counters * _U64_GOLDEN)

    def uniform(self, count: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self.words(count) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return low + (high - low) * u

    def normal(self, count: int) -> np.ndarray:
        half = (count + 1) // 2
        w = self.words(2 * half)
        u1 = ((w[:half] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (w[half:] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * math.pi) * u2
        return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:count]

    def rademacher(self, count: int) -> np.ndarray:
        return np.where(self.words(count) & np.uint64(1), 1.0, -1.0)

    def integers(self, count: int, low: int, high: int) -> np.ndarray:
        """Integers in [low, high), via modulo (bias negligible for high - low << 2^64)."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        span = np.uint64(high - low)
        return (self.words(count) % span).astype(np.int64) + low

    def permutation(self, n: int) -> np.ndarray:
        perm = np.arange(n, dtype=np.int64)
        if n > 1:
            w = self.words(n - 1)
            for idx, i in enumerate(range(n - 1, 0, -1)):
                j = int(w[idx]) % (i + 1)
                perm[i], perm[j] = perm[j], perm[i]
        return perm
