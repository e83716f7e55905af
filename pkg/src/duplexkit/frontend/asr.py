"""Incremental hypothesis stabilization for streaming recognition.

The recognizer backend is polled with the whole audio buffer on a fixed
cadence and returns a full word-timestamped hypothesis each time. Only
the word-level common prefix of two consecutive hypotheses is committed;
everything after it stays revisable. Committed words pass a rule-based
de-hallucination filter before they reach the rest of the pipeline.

All state transitions are pure functions over AsrState; on backend
failure the state is left untouched and a BackendError is raised.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterable, List, Sequence, Tuple

from ..core.tokens import TimedWord
from ..errors import BackendError
from .audio import AudioChunk, total_duration_ms

RESET_COMMAND = "==="

RESET_CAUSES = ("hallucination", "turn_taking", "command")

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class AsrState:
    """Recognizer-side session state.

    ``confirmed`` is the transcript log and only ever grows (resets keep
    it). ``n_prev_confirmed`` counts the leading words of
    ``prev_hypothesis`` that are already part of the log, so repeated
    polls never re-emit them.
    """

    buffer_start_ms: int = 0
    buffered: Tuple[AudioChunk, ...] = ()
    prev_hypothesis: Tuple[TimedWord, ...] = ()
    n_prev_confirmed: int = 0
    confirmed: Tuple[TimedWord, ...] = ()
    hallucination_patterns: Tuple[str, ...] = ()
    reset_log: Tuple[str, ...] = ()


def new_asr_state(patterns: Iterable[str] = ()) -> AsrState:
    return AsrState(hallucination_patterns=tuple(patterns))


def load_patterns(text: str) -> List[str]:
    """Parse a hallucination pattern file: one pattern per line, '#' comments."""
    patterns = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        patterns.append(line)
    return patterns


def word_prefix_len(a: Sequence[TimedWord], b: Sequence[TimedWord]) -> int:
    """Length of the longest common word prefix (surface comparison)."""
    n = 0
    for wa, wb in zip(a, b):
        if wa.surface != wb.surface:
            break
        n += 1
    return n


def dehallucinate(words: Sequence[TimedWord],
                  patterns: Sequence[str]) -> List[TimedWord]:
    """Remove word runs whose concatenated surface equals a known pattern.

    Matching ignores whitespace on both sides. Runs removed in one pass
    may make previously separated neighbours adjacent, so passes repeat
    until stable; the result is therefore a fixpoint and the operation is
    idempotent.
    """
    normalized = {_WS.sub("", p) for p in patterns if _WS.sub("", p)}
    if not normalized:
        return list(words)
    max_len = max(len(p) for p in normalized)
    out = list(words)
    while True:
        kept = _strip_runs(out, normalized, max_len)
        if len(kept) == len(out):
            return kept
        out = kept


def _strip_runs(words: List[TimedWord], patterns, max_len: int) -> List[TimedWord]:
    kept: List[TimedWord] = []
    i = 0
    while i < len(words):
        match_end = None
        concat = ""
        j = i
        while j < len(words) and len(concat) <= max_len:
            concat += _WS.sub("", words[j].surface)
            if concat in patterns:
                match_end = j  # keep extending: remove the maximal run
            j += 1
        if match_end is not None:
            i = match_end + 1
        else:
            kept.append(words[i])
            i += 1
    return kept


def asr_ingest(state: AsrState, segment: AudioChunk,
               backend) -> Tuple[AsrState, List[TimedWord]]:
    """Buffer one cadence of audio and commit newly stable words.

    The backend is asked for a hypothesis over the whole buffer including
    ``segment``. Newly confirmed words are the common prefix of the
    previous and current hypotheses minus what was already committed,
    after de-hallucination. Raises BackendError (state unchanged) if the
    backend fails.
    """
    buffered = state.buffered + (segment,)
    try:
        hypothesis = tuple(backend.transcribe(buffered))
    except Exception as exc:
        raise BackendError(f"hypothesis backend failed: {exc}") from exc

    common = word_prefix_len(state.prev_hypothesis, hypothesis)
    n_confirmed = max(state.n_prev_confirmed, common)
    newly = dehallucinate(hypothesis[state.n_prev_confirmed:n_confirmed],
                          state.hallucination_patterns)
    new_state = replace(
        state,
        buffered=buffered,
        prev_hypothesis=hypothesis,
        n_prev_confirmed=n_confirmed,
        confirmed=state.confirmed + tuple(newly),
    )
    return new_state, newly


def asr_trim(state: AsrState, trim_window_s: int) -> AsrState:
    """Drop the oldest buffered audio beyond the trim window.

    Whole chunks are dropped until the buffer fits; the confirmed
    transcript log is untouched. Hypothesis words that ended before the
    new buffer start leave the comparison window too.
    """
    window_ms = trim_window_s * 1000
    buffered = list(state.buffered)
    dropped_ms = 0
    while buffered and total_duration_ms(buffered) > window_ms:
        dropped_ms += buffered[0].dur_ms
        del buffered[0]
    if dropped_ms == 0:
        return state
    new_start = state.buffer_start_ms + dropped_ms
    n_gone = 0
    for word in state.prev_hypothesis:
        if word.end_ms <= new_start:
            n_gone += 1
        else:
            break
    return replace(
        state,
        buffered=tuple(buffered),
        buffer_start_ms=new_start,
        prev_hypothesis=state.prev_hypothesis[n_gone:],
        n_prev_confirmed=max(0, state.n_prev_confirmed - n_gone),
    )


def asr_reset(state: AsrState, cause: str) -> AsrState:
    """Clear the audio buffer and hypothesis; keep the transcript log.

    ``cause`` is one of RESET_CAUSES; ``command`` is raised exactly when
    the user transmits the literal text "===".
    """
    if cause not in RESET_CAUSES:
        raise ValueError(f"unknown reset cause {cause!r}; expected one of "
                         f"{RESET_CAUSES}")
    end = state.buffered[-1].end_ms if state.buffered else state.buffer_start_ms
    return replace(
        state,
        buffered=(),
        buffer_start_ms=end,
        prev_hypothesis=(),
        n_prev_confirmed=0,
        reset_log=state.reset_log + (cause,),
    )
