"""Sliding-window streaming unit extraction.

Audio arrives in fixed-size chunks. Each chunk is appended to a bounded
FIFO window and the encoder backend is invoked on the whole window, so
every new chunk is encoded with up to a window of left context. Only the
units belonging to the newest chunk are emitted, timestamped on the
fixed-rate unit grid, which makes per-chunk emission deterministic and
duplicate-free by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Tuple

from ..core.config import SessionConfig
from ..core.tokens import Unit, validate_unit
from ..errors import BackendError, GapError
from .audio import AudioChunk


@dataclass(frozen=True)
class TimedUnit:
    """A speech unit anchored at its grid time."""

    unit: Unit
    start_ms: int


@dataclass(frozen=True)
class UnitBuffer:
    """Bounded FIFO of contiguous audio chunks."""

    capacity: int
    chunks: Tuple[AudioChunk, ...] = ()
    last_emitted_unit_time_ms: int = -1

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if len(self.chunks) > self.capacity:
            raise ValueError("chunk count exceeds capacity")


def new_unit_buffer(config: SessionConfig) -> UnitBuffer:
    return UnitBuffer(capacity=config.window_chunks)


def grid_times(start_ms: int, end_ms: int, unit_t_ms: int) -> List[int]:
    """Unit-grid timestamps (multiples of unit_t_ms) in [start_ms, end_ms)."""
    first = -(-start_ms // unit_t_ms) * unit_t_ms
    return list(range(first, end_ms, unit_t_ms))


def unit_push(buffer: UnitBuffer, chunk: AudioChunk, backend,
              config: SessionConfig) -> Tuple[UnitBuffer, List[TimedUnit]]:
    """Append one chunk, evict past the window, and emit its units.

    The chunk must be contiguous with the newest buffered chunk. The
    backend sees the full window and returns one unit index per grid slot
    of the window span; the emitted frame is the slice of slots inside
    the new chunk.
    """
    if chunk.dur_ms != config.unit_chunk_ms:
        raise ValueError(
            f"chunk {chunk.id!r} is {chunk.dur_ms} ms; expected "
            f"{config.unit_chunk_ms} ms")
    if buffer.chunks and chunk.start_ms != buffer.chunks[-1].end_ms:
        raise GapError(
            f"chunk {chunk.id!r} starts at {chunk.start_ms} ms but the "
            f"buffer ends at {buffer.chunks[-1].end_ms} ms")

    window = buffer.chunks + (chunk,)
    if len(window) > buffer.capacity:
        window = window[len(window) - buffer.capacity:]

    slots = grid_times(window[0].start_ms, window[-1].end_ms, config.unit_t_ms)
    try:
        values = list(backend.encode(window))
    except Exception as exc:
        raise BackendError(f"unit encoder failed: {exc}") from exc
    if len(values) != len(slots):
        raise BackendError(
            f"unit encoder returned {len(values)} units for {len(slots)} "
            f"grid slots")

    frame_slots = grid_times(chunk.start_ms, chunk.end_ms, config.unit_t_ms)
    frame_values = values[len(slots) - len(frame_slots):]
    frame = [TimedUnit(Unit(validate_unit(v, config.unit_vocab_size)), t)
             for v, t in zip(frame_values, frame_slots)]

    last_t = frame[-1].start_ms if frame else buffer.last_emitted_unit_time_ms
    return replace(buffer, chunks=window, last_emitted_unit_time_ms=last_t), frame
