"""Deterministic 64-bit PRNG shared by every seeded component.

A xorshift64 shift-register generator (shift triple 13, 7, 17) over a state
seeded through one splitmix64 scramble.  The exact bit stream is a function of
the seed alone, so any consumer -- in any language -- can reproduce it:

    state <- splitmix64(seed)        (0 is remapped to a fixed odd constant)
    next: x ^= x << 13; x ^= x >> 7; x ^= x << 17   (all mod 2**64)
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 output step for input ``x`` (used for seeding)."""
    x = (x + _GOLDEN) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64:
    """xorshift64 generator; deterministic given the constructor seed."""

    def __init__(self, seed: int):
        self.state = splitmix64(seed & MASK64)
        if self.state == 0:  # xorshift fixpoint; any nonzero constant works
            self.state = _GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= (x << 13) & MASK64
        x ^= x >> 7
        x ^= (x << 17) & MASK64
        self.state = x
        return x

    def next_bit(self) -> int:
        return self.next_u64() >> 63

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (MASK64 + 1) - ((MASK64 + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
