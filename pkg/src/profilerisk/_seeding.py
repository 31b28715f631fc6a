"""Seed derivation shared by every randomized component.

Sub-seed ``i`` of a master seed is the ``i+1``-th SplitMix64 output::

    derive_seed(master, i) = mix64(master + (i + 1) * GAMMA  mod 2**64)

Monte Carlo trial ``t`` then runs its own SplitMix64 stream starting from
``derive_seed(seed, t)``, so a trial's draws depend only on (seed, t) and
never on execution order.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    return mix64((master & MASK64) + (index + 1) * GAMMA)


def derive_seeds(master: int, n: int) -> list[int]:
    return [derive_seed(master, i) for i in range(n)]


class SplitMix64:
    """Scalar reference stream; the kernels reproduce it exactly."""

    def __init__(self, state: int) -> None:
        self.state = state & MASK64

    def next64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def below(self, m: int) -> int:
        """Uniform integer in [0, m), Lemire multiply-shift on the high 32 bits with rejection."""
        x = self.next64() >> 32
        prod = x * m
        low = prod & 0xFFFFFFFF
        if low < m:
            thresh = ((1 << 32) - m) % m
            while low < thresh:
                x = self.next64() >> 32
                prod = x * m
                low = prod & 0xFFFFFFFF
        return prod >> 32
