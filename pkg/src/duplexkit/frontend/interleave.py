"""Time-aligned interleaving of confirmed words with speech units.

Each confirmed word becomes a text token followed by the units whose grid
time falls inside the word's span. Units that fall between words (or
between confirmation batches) would otherwise be dropped, so a bounded
"gap recovery" window of the most recent units is emitted before each
word. A running cursor guarantees no unit is ever emitted twice.

The same weaving core serves the online path (bounded recovery window)
and the offline corpus path (unbounded window plus a final flush), so the
two are identical by construction.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from ..core.tokens import Text, TimedWord, Token
from ..errors import TimelineError
from .units import TimedUnit


@dataclass(frozen=True)
class InterleaveState:
    """Per-session weaving cursor and emission counters."""

    last_consumed_unit_end_ms: int = 0
    emitted_text: int = 0
    emitted_units: int = 0


def check_monotone_words(words: Sequence[TimedWord]) -> None:
    for prev, cur in zip(words, words[1:]):
        if cur.start_ms < prev.start_ms:
            raise TimelineError(
                f"words out of time order: {cur.surface!r} at {cur.start_ms} "
                f"after {prev.surface!r} at {prev.start_ms}")


def check_monotone_units(units: Sequence[TimedUnit]) -> None:
    for prev, cur in zip(units, units[1:]):
        if cur.start_ms < prev.start_ms:
            raise TimelineError(
                f"units out of time order at {cur.start_ms} after "
                f"{prev.start_ms}")


def _units_in(units: Sequence[TimedUnit], starts: Sequence[int],
              lo_ms: int, hi_ms: int) -> Sequence[TimedUnit]:
    """Units with start in [lo_ms, hi_ms)."""
    if hi_ms <= lo_ms:
        return ()
    lo = bisect_left(starts, lo_ms)
    hi = bisect_left(starts, hi_ms)
    return units[lo:hi]


def weave(cursor_ms: int, words: Sequence[TimedWord],
          unit_log: Sequence[TimedUnit],
          gap_cap_ms: Optional[int]) -> Tuple[List[Token], int]:
    """Core weaving pass; returns (tokens, advanced cursor).

    ``gap_cap_ms`` bounds how far back recovered units may reach before
    each word; None means unbounded (offline).
    """
    check_monotone_words(words)
    starts = [u.start_ms for u in unit_log]
    tokens: List[Token] = []
    cursor = cursor_ms
    for word in words:
        gap_lo = cursor
        if gap_cap_ms is not None:
            gap_lo = max(gap_lo, word.start_ms - gap_cap_ms)
        for tu in _units_in(unit_log, starts, gap_lo, word.start_ms):
            tokens.append(tu.unit)
        cursor = max(cursor, word.start_ms)
        tokens.append(Text(word.surface))
        for tu in _units_in(unit_log, starts, cursor, word.end_ms):
            tokens.append(tu.unit)
        cursor = max(cursor, word.end_ms)
    return tokens, cursor


def interleave(state: InterleaveState, new_words: Sequence[TimedWord],
               unit_log: Sequence[TimedUnit],
               gap_cap_ms: Optional[int] = 2000
               ) -> Tuple[InterleaveState, List[Token]]:
    """Online weaving of a newly confirmed batch against the unit log.

    ``gap_cap_ms`` is the session's recovery bound; pass None for the
    offline (unbounded) behaviour.
    """
    tokens, cursor = weave(state.last_consumed_unit_end_ms, new_words,
                           unit_log, gap_cap_ms)
    n_text = sum(1 for t in tokens if isinstance(t, Text))
    new_state = replace(
        state,
        last_consumed_unit_end_ms=cursor,
        emitted_text=state.emitted_text + n_text,
        emitted_units=state.emitted_units + (len(tokens) - n_text),
    )
    return new_state, tokens


def flush(state: InterleaveState, unit_log: Sequence[TimedUnit],
          unit_t_ms: int) -> Tuple[InterleaveState, List[Token]]:
    """Emit every unit at or after the cursor (end of utterance)."""
    starts = [u.start_ms for u in unit_log]
    tail = _units_in(unit_log, starts, state.last_consumed_unit_end_ms,
                     starts[-1] + 1 if starts else 0)
    tokens: List[Token] = [tu.unit for tu in tail]
    cursor = (tail[-1].start_ms + unit_t_ms) if tail \
        else state.last_consumed_unit_end_ms
    new_state = replace(
        state,
        last_consumed_unit_end_ms=cursor,
        emitted_units=state.emitted_units + len(tokens),
    )
    return new_state, tokens
