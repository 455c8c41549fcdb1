"""Normative deterministic randomness.

Random chunk plans must reproduce byte-exactly across runs, platforms and
implementation languages, so the generator and the shuffle are pinned here
rather than delegated to a host library:

* generator: SplitMix64 over the 64-bit seed;
* bounded draw: ``next_u64() % bound`` (the modulo bias is irrelevant at
  these sizes and keeps the definition one line);
* shuffle: Fisher-Yates from the top index down.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 sequence over a 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def getstate(self) -> int:
        return self._state

    def setstate(self, state: int) -> None:
        self._state = state & _MASK64


def shuffled(n: int, seed: int) -> list[int]:
    """Return 0..n-1 permuted by a seeded Fisher-Yates shuffle."""
    rng = SplitMix64(seed)
    out = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.next_below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def sample_indices(n: int, k: int, seed: int) -> list[int]:
    """First k indices of the seeded shuffle of 0..n-1 (k distinct picks)."""
    if k > n:
        raise ValueError("cannot sample more indices than available")
    return shuffled(n, seed)[:k]
