"""Portable seeded PRNG for the benchmark generators.

xoshiro256** with splitmix64 state initialization, so that a given seed
yields bit-identical task draws in any implementation of the same recipe.
Doubles come from the top 53 bits of each 64-bit output.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_DOUBLE_SCALE = 2.0 ** -53


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, (z ^ (z >> 31)) & MASK64


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** generator seeded from four splitmix64 outputs."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        sm = seed & MASK64
        state = []
        for _ in range(4):
            sm, word = splitmix64(sm)
            state.append(word)
        self._s = state

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self, low: float, high: float) -> float:
        """Uniform double in [low, high) from the next 64-bit draw."""
        u = (self.next_u64() >> 11) * _DOUBLE_SCALE
        return low + (high - low) * u
