"""Opaque timed audio carrier.

No signal processing happens anywhere in this package: audio is a chunk
id plus a time span, produced by a capture source and interpreted only by
backends.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class AudioChunk:
    """A span of audio [start_ms, end_ms) identified by an opaque id."""

    id: str
    start_ms: int
    dur_ms: int

    def __post_init__(self):
        if self.start_ms < 0 or self.dur_ms < 0:
            raise ValueError(f"invalid audio span for chunk {self.id!r}")

    @property
    def end_ms(self) -> int:
        return self.start_ms + self.dur_ms


def total_duration_ms(chunks) -> int:
    return sum(c.dur_ms for c in chunks)
