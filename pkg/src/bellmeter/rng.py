"""Seedable, splittable 64-bit pseudo-random generator (SplitMix64).

SplitMix64 steps a 64-bit counter by the golden-gamma increment and
scrambles it with an avalanching finalizer.  Child streams are derived
by hashing the parent seed together with a stream index, so any stream
can be reconstructed from ``(seed, index)`` alone.  The Monte Carlo
simulator relies on this: trial ``t`` always uses ``stream(seed, t)``,
which makes chunked and serial runs bit-identical.

The compiled kernels re-implement the same arithmetic on C ``uint64``;
the test suite pins both against frozen reference outputs.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_DOUBLE_UNIT = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """Finalizer from SplitMix64 (variant 13 of the murmur-style mixers)."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def stream_state(seed: int, index: int) -> int:
    """Initial state of child stream ``index`` under ``seed``.

    The index is scrambled before being folded into the seed so that
    consecutive indices do not yield overlapping counter sequences.
    """
    return mix64((seed & _MASK64) ^ mix64(((index + 1) * GAMMA) & _MASK64))


class SplitMix64:
    """Stateful wrapper around the SplitMix64 sequence."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    @classmethod
    def stream(cls, seed: int, index: int) -> "SplitMix64":
        rng = cls(0)
        rng._state = stream_state(seed, index)
        return rng

    def next_uint64(self) -> int:
        self._state = (self._state + GAMMA) & _MASK64
        return mix64(self._state)

    def random(self) -> float:
        """Uniform double in [0, 1): top 53 bits of the next output."""
        return (self.next_uint64() >> 11) * _DOUBLE_UNIT

    def exponential(self) -> float:
        """Standard exponential deviate via inversion; log1p avoids log(0)."""
        return -math.log1p(-self.random())

    def uniforms(self, n: int) -> list[float]:
        return [self.random() for _ in range(n)]
