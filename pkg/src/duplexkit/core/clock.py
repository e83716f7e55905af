"""Dual-mode clock and a deterministic event queue.

Simulated mode drives every test: time advances only when the event queue
dispatches, so identical inputs replay to identical traces. Realtime mode
wraps the monotonic wall clock for live sessions.
"""

from __future__ import annotations

import heapq
import time
from typing import Callable, Optional


class SimulatedClock:
    """Discrete-event clock; advances only via explicit calls, never backwards."""

    mode = "simulated"

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    @property
    def now_ms(self) -> int:
        return self._now

    def advance_to(self, t_ms: int) -> None:
        if t_ms < self._now:
            raise ValueError(f"clock cannot go backwards: {t_ms} < {self._now}")
        self._now = t_ms

    def advance_by(self, delta_ms: int) -> None:
        if delta_ms < 0:
            raise ValueError("negative clock advance")
        self._now += delta_ms


class WallClock:
    """Monotonic wall clock in integer milliseconds."""

    mode = "realtime"

    def __init__(self):
        self._origin = time.monotonic()

    @property
    def now_ms(self) -> int:
        return int((time.monotonic() - self._origin) * 1000)


class EventHandle:
    """Cancellation handle for a scheduled event."""

    __slots__ = ("t_ms", "cancelled")

    def __init__(self, t_ms: int):
        self.t_ms = t_ms
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class EventQueue:
    """Time-ordered callback dispatch over a simulated clock.

    Ties break by scheduling order, which makes dispatch fully
    deterministic. One queue per session; not thread-safe.
    """

    def __init__(self, clock: SimulatedClock):
        self.clock = clock
        self._heap: list = []
        self._seq = 0

    def at(self, t_ms: int, fn: Callable[[], None], *,
           late: bool = False) -> EventHandle:
        """Schedule ``fn`` at ``t_ms``.

        ``late`` marks deadline checks (turn-wait caps, chunk cuts) that
        must observe every other event carrying the same timestamp first.
        """
        if t_ms < self.clock.now_ms:
            raise ValueError(
                f"cannot schedule in the past: {t_ms} < {self.clock.now_ms}")
        handle = EventHandle(t_ms)
        heapq.heappush(self._heap, (t_ms, 1 if late else 0, self._seq, handle, fn))
        self._seq += 1
        return handle

    def after(self, delay_ms: int, fn: Callable[[], None], *,
              late: bool = False) -> EventHandle:
        return self.at(self.clock.now_ms + delay_ms, fn, late=late)

    def __len__(self) -> int:
        return sum(1 for (_, _, _, h, _) in self._heap if not h.cancelled)

    def next_time(self) -> Optional[int]:
        """Timestamp of the earliest pending event, or None."""
        while self._heap and self._heap[0][3].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0][0] if self._heap else None

    def step(self) -> bool:
        """Dispatch exactly one pending event; False when the queue is empty."""
        while True:
            t = self.next_time()
            if t is None:
                return False
            _, _, _, handle, fn = heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            self.clock.advance_to(t)
            fn()
            return True

    def run_until(self, t_end_ms: int) -> int:
        """Dispatch all events with t <= t_end_ms; returns dispatch count."""
        count = 0
        while True:
            t = self.next_time()
            if t is None or t > t_end_ms:
                break
            _, _, _, handle, fn = heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            self.clock.advance_to(t)
            fn()
            count += 1
        if t_end_ms > self.clock.now_ms:
            self.clock.advance_to(t_end_ms)
        return count

    def run_all(self, max_events: int = 1_000_000) -> int:
        """Dispatch until the queue drains; guards against runaway loops."""
        count = 0
        while True:
            t = self.next_time()
            if t is None:
                return count
            _, _, _, handle, fn = heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            self.clock.advance_to(t)
            fn()
            count += 1
            if count > max_events:
                raise RuntimeError(f"event queue exceeded {max_events} events")
