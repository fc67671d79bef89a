"""Byte-pacing token bucket used to shape the download server's send rate.

The bucket is deliberately split into a pure core (`reserve`, driven by an
injectable clock so it can be verified against synthetic time) and a thin
asyncio wrapper (`acquire`). `reserve` allows debt: a caller may reserve more
bytes than the bucket holds and is told how long to wait before sending, which
keeps the long-run rate exact without ever deadlocking on oversized payloads.
"""

from __future__ import annotations

import asyncio
import time
from typing import Callable


class TokenBucket:
    def __init__(
        self,
        rate_bytes_per_second: float,
        burst_bytes: float | None = None,
        *,
        clock: Callable[[], float] = time.monotonic,
    ):
        if rate_bytes_per_second <= 0:
            raise ValueError("rate_bytes_per_second must be positive")
        self.rate = float(rate_bytes_per_second)
        # Default burst: a quarter second of traffic, never less than 8 KiB.
        self.burst = float(burst_bytes) if burst_bytes is not None else max(self.rate * 0.25, 8192.0)
        if self.burst <= 0:
            raise ValueError("burst_bytes must be positive")
        self._clock = clock
        self._tokens = 0.0
        self._updated = clock()

    @classmethod
    def for_mbps(cls, mbps: float, **kwargs) -> "TokenBucket":
        """Bucket for a rate given in decimal megabits per second."""
        return cls(mbps * 1e6 / 8, **kwargs)

    def reserve(self, nbytes: int) -> float:
        """Debit nbytes and return how long the caller must wait before sending.

        Returns 0.0 when the bytes were already covered by accumulated tokens.
        """
        if nbytes < 0:
            raise ValueError("nbytes must be nonnegative")
        now = self._clock()
        self._tokens = min(self.burst, self._tokens + (now - self._updated) * self.rate)
        self._updated = now
        self._tokens -= nbytes
        if self._tokens >= 0:
            return 0.0
        return -self._tokens / self.rate

    async def acquire(self, nbytes: int) -> None:
        wait = self.reserve(nbytes)
        if wait > 0:
            await asyncio.sleep(wait)
