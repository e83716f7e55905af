"""Dynamic chunk scheduling for streaming unit-to-audio synthesis.

The synthesis backend is an offline model, so the stream is cut into
chunks. Every chunk boundary is a potential audio artifact, so chunks
should be as large as possible without adding latency: each cut is
scheduled just before the previous chunk's audio finishes playing,

    next cut = cut_k + n_k * t_unit - epsilon,

where n_k is the chunk's unit count, t_unit the playback time of one
unit, and epsilon a manual margin that lets synthesis start slightly
early to hide processing time. When units are generated faster than they
play back, chunk sizes grow and boundary count shrinks.

DynamicChunker is the incremental engine used on the session event loop;
run_stream sweeps a whole arrival list through it for offline analysis
and tests. fixed_chunk_count is the naive fixed-period baseline used for
comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .core.tokens import Unit
from .errors import ScheduleError, TimelineError


@dataclass(frozen=True)
class DecoderBackendProfile:
    """Simulated synthesis cost per chunk."""

    processing_ms_per_chunk: int = 0

    def __post_init__(self):
        if self.processing_ms_per_chunk < 0:
            raise ValueError("processing time must be >= 0")


@dataclass(frozen=True)
class UnitArrival:
    """A speech unit arriving from the generator at ``t_ms``."""

    t_ms: int
    unit: Unit


@dataclass(frozen=True)
class ChunkEntry:
    """One synthesized chunk of the plan."""

    index: int
    t_ms: int                  # cut time
    units: Tuple[Unit, ...]
    playback_start_ms: int
    playback_end_ms: int
    deferred: bool             # cut waited for a unit past its scheduled time

    @property
    def n_units(self) -> int:
        return len(self.units)


@dataclass(frozen=True)
class ChunkPlan:
    """The realized schedule: entries plus the parameters that shaped it."""

    t_unit_ms: int
    epsilon_ms: int
    entries: Tuple[ChunkEntry, ...] = ()

    def to_json(self) -> dict:
        return {
            "t_unit_ms": self.t_unit_ms,
            "epsilon_ms": self.epsilon_ms,
            "entries": [
                {"index": e.index, "t_ms": e.t_ms, "n_units": e.n_units,
                 "playback_start_ms": e.playback_start_ms,
                 "playback_end_ms": e.playback_end_ms,
                 "deferred": e.deferred}
                for e in self.entries
            ],
        }


@dataclass(frozen=True)
class AudioChunkEvent:
    """Synthesized audio becoming available."""

    chunk_index: int
    ref: str
    ready_ms: int
    playback_start_ms: int
    dur_ms: int


@dataclass(frozen=True)
class UnderrunEvent:
    """Playback missed: synthesis finished after the previous chunk drained."""

    chunk_index: int
    expected_start_ms: int
    actual_start_ms: int

    @property
    def gap_ms(self) -> int:
        return self.actual_start_ms - self.expected_start_ms


@dataclass(frozen=True)
class StallEvent:
    """Playback drained before the next unit even arrived (starvation)."""

    chunk_index: int
    idle_from_ms: int
    resumed_ms: int


def schedule_next(t_k: int, n_k: int, t_unit: int, epsilon: int) -> int:
    """Time of the next cut after a chunk of ``n_k`` units cut at ``t_k``."""
    if n_k < 1:
        raise ValueError("chunk must contain at least one unit")
    if t_unit <= 0:
        raise ValueError("t_unit must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon > n_k * t_unit:
        raise ScheduleError(
            f"epsilon ({epsilon}) exceeds the chunk span ({n_k * t_unit}); "
            f"the schedule would move backwards past {t_k}")
    return t_k + n_k * t_unit - epsilon


class DynamicChunker:
    """Incremental cut engine; one per machine turn.

    Drive it with on_unit() for every arrival and on_timer() when the
    scheduled cut time is reached (schedule returned by next_cut_time()).
    Ties between an arrival and a cut at the same instant must be
    resolved arrivals-first so the unit joins the chunk.
    """

    def __init__(self, t_unit_ms: int, epsilon_ms: int,
                 profile: DecoderBackendProfile = DecoderBackendProfile(),
                 priming_units: int = 1, ref_prefix: str = "chunk"):
        if priming_units < 0:
            raise ValueError("priming_units must be >= 0")
        self.t_unit_ms = t_unit_ms
        self.epsilon_ms = epsilon_ms
        self.profile = profile
        self.priming_units = priming_units
        self.ref_prefix = ref_prefix
        self.pending: List[Unit] = []
        self.arrived = 0
        self.entries: List[ChunkEntry] = []
        self.audio_events: List[AudioChunkEvent] = []
        self.underruns: List[UnderrunEvent] = []
        self.stalls: List[StallEvent] = []
        self._next_sched: Optional[int] = None
        self._awaiting_unit = False
        self._playback_end: Optional[int] = None
        self._last_t: Optional[int] = None

    def next_cut_time(self) -> Optional[int]:
        return self._next_sched

    def on_unit(self, t_ms: int, unit: Unit) -> Optional[ChunkEntry]:
        """Record an arrival; may fire the first or a deferred cut."""
        if self._last_t is not None and t_ms < self._last_t:
            raise TimelineError(f"unit arrivals out of order at {t_ms}")
        self._last_t = t_ms
        self.pending.append(unit)
        self.arrived += 1
        if self._awaiting_unit:
            self._awaiting_unit = False
            return self._cut(t_ms, deferred=True)
        if not self.entries and self._next_sched is None \
                and self.arrived >= 1 + self.priming_units:
            return self._cut(t_ms, deferred=False)
        return None

    def on_timer(self, t_ms: int) -> Optional[ChunkEntry]:
        """Fire the scheduled cut; defers to the next arrival if starved."""
        if self._next_sched is None or t_ms != self._next_sched:
            raise ValueError(f"no cut scheduled at {t_ms}")
        self._next_sched = None
        if not self.pending:
            self._awaiting_unit = True
            return None
        return self._cut(t_ms, deferred=False)

    def flush(self, t_ms: int) -> Optional[ChunkEntry]:
        """Cut whatever is pending (end of the turn)."""
        self._next_sched = None
        self._awaiting_unit = False
        if not self.pending:
            return None
        return self._cut(max(t_ms, self._last_t or t_ms), deferred=True)

    def _cut(self, t_ms: int, deferred: bool) -> ChunkEntry:
        units = tuple(self.pending)
        self.pending.clear()
        n = len(units)
        index = len(self.entries)
        ready = t_ms + self.profile.processing_ms_per_chunk

        if self._playback_end is None:
            start = ready
        elif ready <= self._playback_end:
            start = self._playback_end
        elif t_ms <= self._playback_end:
            # cut happened in time but synthesis outlived the margin
            self.underruns.append(UnderrunEvent(index, self._playback_end, ready))
            start = ready
        else:
            self.stalls.append(StallEvent(index, self._playback_end, ready))
            start = ready
        end = start + n * self.t_unit_ms

        entry = ChunkEntry(index=index, t_ms=t_ms, units=units,
                           playback_start_ms=start, playback_end_ms=end,
                           deferred=deferred)
        self.entries.append(entry)
        self.audio_events.append(AudioChunkEvent(
            chunk_index=index, ref=f"{self.ref_prefix}{index}",
            ready_ms=ready, playback_start_ms=start,
            dur_ms=n * self.t_unit_ms))
        self._playback_end = end
        # a chunk shorter than the margin cannot honor it; clamp so slow
        # generators degrade to per-arrival (deferred) cuts instead of
        # scheduling into the past
        epsilon = min(self.epsilon_ms, n * self.t_unit_ms)
        self._next_sched = schedule_next(t_ms, n, self.t_unit_ms, epsilon)
        return entry

    def plan(self) -> ChunkPlan:
        return ChunkPlan(t_unit_ms=self.t_unit_ms, epsilon_ms=self.epsilon_ms,
                         entries=tuple(self.entries))


@dataclass(frozen=True)
class StreamResult:
    plan: ChunkPlan
    audio_events: Tuple[AudioChunkEvent, ...]
    underruns: Tuple[UnderrunEvent, ...]
    stalls: Tuple[StallEvent, ...]


def run_stream(unit_events: Sequence[UnitArrival], clock,
               profile: DecoderBackendProfile, epsilon_ms: int,
               t_unit_ms: int, priming_units: int = 1) -> StreamResult:
    """Sweep a complete arrival stream through the cut engine.

    Arrivals must be time-ordered. An empty stream yields an empty plan.
    The clock, when given, is advanced through every cut so callers can
    observe simulated time.
    """
    arrivals = list(unit_events)
    for prev, cur in zip(arrivals, arrivals[1:]):
        if cur.t_ms < prev.t_ms:
            raise TimelineError("unit arrivals must be time-ordered")

    ch = DynamicChunker(t_unit_ms, epsilon_ms, profile, priming_units)
    i = 0
    while True:
        nt = ch.next_cut_time()
        next_arrival = arrivals[i] if i < len(arrivals) else None
        if nt is None and next_arrival is None:
            break
        # arrivals win ties so a unit landing exactly at the cut joins it
        if nt is not None and (next_arrival is None or nt < next_arrival.t_ms):
            if clock is not None:
                clock.advance_to(max(clock.now_ms, nt))
            ch.on_timer(nt)
        else:
            if clock is not None:
                clock.advance_to(max(clock.now_ms, next_arrival.t_ms))
            ch.on_unit(next_arrival.t_ms, next_arrival.unit)
            i += 1
    if ch.pending:
        # stream shorter than the priming threshold: emit what exists
        ch.flush(arrivals[-1].t_ms)
    return StreamResult(plan=ch.plan(),
                        audio_events=tuple(ch.audio_events),
                        underruns=tuple(ch.underruns),
                        stalls=tuple(ch.stalls))


def fixed_chunk_count(unit_events: Sequence[UnitArrival],
                      period_ms: int = 100) -> int:
    """Chunk count of the naive fixed-period baseline on the same stream."""
    arrivals = sorted(a.t_ms for a in unit_events)
    if not arrivals:
        return 0
    count = 0
    pending = 0
    i = 0
    t = arrivals[0]
    while i < len(arrivals):
        while i < len(arrivals) and arrivals[i] <= t:
            pending += 1
            i += 1
        if pending:
            count += 1
            pending = 0
        t += period_ms
    return count


def verify_recurrence(plan: ChunkPlan) -> bool:
    """True iff every adjacent non-deferred pair satisfies the cut formula."""
    for a, b in zip(plan.entries, plan.entries[1:]):
        if b.deferred:
            continue
        if b.t_ms != a.t_ms + a.n_units * plan.t_unit_ms - plan.epsilon_ms:
            return False
    return True
