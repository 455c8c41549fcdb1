"""Monotonic time sources: real for serving, virtual for deterministic runs."""

from __future__ import annotations

import time


class MonotonicClock:
    """Wall-clock milliseconds from the process monotonic timer."""

    virtual = False

    def now_ms(self) -> int:
        return time.monotonic_ns() // 1_000_000

    def wait_until(self, deadline_ms: int) -> int:
        while True:
            now = self.now_ms()
            if now >= deadline_ms:
                return now
            time.sleep((deadline_ms - now) / 1000.0)


class VirtualClock:
    """Deterministic clock that jumps to each awaited deadline without sleeping."""

    virtual = True

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def wait_until(self, deadline_ms: int) -> int:
        if deadline_ms > self._now:
            self._now = deadline_ms
        return self._now
