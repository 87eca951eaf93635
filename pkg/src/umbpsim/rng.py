"""SplitMix64 generator shared by the trace generators and UMBP sampling.

The algorithm is Steele, Lea & Flood's SplitMix64 (also the seeding routine
of xoshiro256).  It is implemented here rather than borrowed from ``random``
so that golden trace files and sampled classifier decisions stay bit-stable
across Python and NumPy versions.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int = 0):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``, unbiased (rejection sampling)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def sample(self, population: list, k: int) -> list:
        """Draw ``k`` items without replacement (partial Fisher-Yates).

        The input list is not modified.  Output order is draw order.
        """
        pool = list(population)
        k = min(k, len(pool))
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
