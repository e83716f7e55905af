"""Backend interfaces and their deterministic scripted implementations.

Four backends sit behind the pipeline: a hypothesis source (recognizer),
a unit encoder, a language model, and a unit decoder. Real model adapters
are out of scope; the scripted implementations below replay scenario
tables so that every runtime behaviour is testable on a desk, under the
simulated clock, with byte-identical traces across runs. Scripted
backends never consult the wall clock.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .core.tokens import (
    EOT,
    SPEAKER_USER,
    EndOfTurn,
    Header,
    Text,
    TimedWord,
    Token,
    Unit,
)
from .errors import BackendError
from .frontend.audio import AudioChunk
from .frontend.units import grid_times
from .scheduler import DecoderBackendProfile

REALTIME_CAPABLE = "realtime_capable"
TOO_SLOW = "too_slow"


def scripted_generation_rate_check(rate_tokens_per_s: float,
                                   unit_rate_hz: float) -> str:
    """Whether a generator at this token rate can feed playback in real time.

    Tokens must come at least as fast as units are played back.
    """
    if rate_tokens_per_s <= 0 or unit_rate_hz <= 0:
        raise ValueError("rates must be positive")
    return REALTIME_CAPABLE if rate_tokens_per_s >= unit_rate_hz else TOO_SLOW


def _stable_unit(key: str, vocab: int) -> int:
    """Deterministic, platform-stable pseudo unit value."""
    return zlib.crc32(key.encode("utf-8")) % vocab


# ---------------------------------------------------------------------------
# hypothesis source


class ScriptedAsr:
    """Replays hypothesis tables keyed by how much audio is buffered.

    Each entry (extent_ms, words) becomes the current hypothesis once the
    buffered audio reaches extent_ms. ``fail_at`` extents raise instead,
    for fault-path tests.
    """

    def __init__(self, script: Sequence[Tuple[int, Sequence[TimedWord]]],
                 fail_at: Sequence[int] = ()):
        self.script = sorted(script, key=lambda e: e[0])
        self.fail_at = set(fail_at)

    def transcribe(self, buffered: Sequence[AudioChunk]) -> List[TimedWord]:
        extent = buffered[-1].end_ms if buffered else 0
        if extent in self.fail_at:
            raise BackendError(f"scripted recognizer fault at {extent} ms")
        current: Sequence[TimedWord] = ()
        for at_ms, words in self.script:
            if at_ms <= extent:
                current = words
            else:
                break
        return list(current)


# ---------------------------------------------------------------------------
# unit encoder


class ScriptedEncoder:
    """Unit values per chunk id, or a stable hash when unscripted.

    The encoder contract is one unit value per grid slot of the window;
    values for a chunk are taken from the scripted list (cycled over the
    chunk's slots) so authors do not have to predict slot counts.
    """

    def __init__(self, chunk_units: Optional[Dict[str, Sequence[int]]] = None,
                 unit_vocab_size: int = 1024, unit_t_ms: int = 40):
        self.chunk_units = dict(chunk_units or {})
        self.vocab = unit_vocab_size
        self.unit_t_ms = unit_t_ms

    def encode(self, window: Sequence[AudioChunk]) -> List[int]:
        values: List[int] = []
        for chunk in window:
            slots = grid_times(chunk.start_ms, chunk.end_ms, self.unit_t_ms)
            scripted = self.chunk_units.get(chunk.id)
            for k in range(len(slots)):
                if scripted:
                    values.append(scripted[k % len(scripted)] % self.vocab)
                else:
                    values.append(_stable_unit(f"{chunk.id}:{k}", self.vocab))
        return values


# ---------------------------------------------------------------------------
# language model


@dataclass(frozen=True)
class ScriptedLmState:
    """Cursor into one generation script."""

    cursor: int = 0
    tokens_per_second: int = 100

    @property
    def step_interval_ms(self) -> int:
        return 1000 // self.tokens_per_second


def scripted_lm_step(state: ScriptedLmState,
                     script: Sequence[Tuple[Token, float]],
                     context: Sequence[Token]
                     ) -> Tuple[Token, float, ScriptedLmState]:
    """Next scripted (token, end-of-turn probability); exhaustion ends the turn."""
    if state.cursor >= len(script):
        return EOT, 1.0, state
    token, p = script[state.cursor]
    return token, p, replace(state, cursor=state.cursor + 1)


@dataclass(frozen=True)
class EotRule:
    """One scripted end-of-turn judgment.

    Matches when the pending user segment equals ``utterance`` (text
    concatenated, whitespace ignored) or contains at least ``min_units``
    speech units; ``turn`` restricts the rule to one machine-turn index.
    """

    p: float
    utterance: Optional[str] = None
    min_units: Optional[int] = None
    turn: Optional[int] = None
    fail: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability {self.p} outside [0, 1]")


def pending_user_segment(context: Sequence[Token]) -> List[Token]:
    """Tokens of the user turn currently being accumulated, if any."""
    last_header = None
    for i in range(len(context) - 1, -1, -1):
        if isinstance(context[i], Header):
            last_header = i
            break
    if last_header is None or context[last_header].speaker != SPEAKER_USER:
        return []
    return [t for t in context[last_header + 1:]
            if not isinstance(t, EndOfTurn)]


def machine_turn_count(context: Sequence[Token]) -> int:
    from .core.tokens import SPEAKER_MACHINE
    return sum(1 for t in context
               if isinstance(t, Header) and t.speaker == SPEAKER_MACHINE)


class ScriptedLm:
    """Scenario-driven language model.

    End-of-turn probabilities are a pure function of the context (the
    pending user segment plus the machine-turn index), so identical
    contexts always yield identical judgments regardless of timing or
    turn-taking mode. Replies are per-turn token scripts replayed at
    ``tokens_per_second``.
    """

    def __init__(self, turns: Sequence[Sequence[Token]] = (),
                 eot_rules: Sequence[EotRule] = (),
                 default_eot: float = 0.0,
                 tokens_per_second: int = 100,
                 first_token_delay_ms: int = 0,
                 fail_at: Optional[Tuple[int, int]] = None):
        if tokens_per_second <= 0:
            raise ValueError("tokens_per_second must be positive")
        if not 0.0 <= default_eot <= 1.0:
            raise ValueError("default_eot outside [0, 1]")
        self.turns = [tuple(t) for t in turns]
        self.eot_rules = tuple(eot_rules)
        self.default_eot = default_eot
        self.tokens_per_second = tokens_per_second
        self.first_token_delay_ms = first_token_delay_ms
        self.fail_at = fail_at  # (turn index, step) that raises

    def eot_probability(self, context: Sequence[Token]) -> float:
        segment = pending_user_segment(context)
        text = "".join(t.surface for t in segment if isinstance(t, Text))
        text = "".join(text.split())
        n_units = sum(1 for t in segment if isinstance(t, Unit))
        turn = machine_turn_count(context)
        for rule in self.eot_rules:
            if rule.turn is not None and rule.turn != turn:
                continue
            matched = False
            if rule.utterance is not None:
                matched = "".join(rule.utterance.split()) == text
            if not matched and rule.min_units is not None:
                matched = n_units >= rule.min_units
            if matched:
                if rule.fail:
                    raise BackendError("scripted end-of-turn fault")
                return rule.p
        return self.default_eot

    def turn_script(self, turn_index: int) -> Tuple[Tuple[Token, float], ...]:
        """The (token, probability) script for one machine turn."""
        if turn_index >= len(self.turns):
            return ()
        tokens = self.turns[turn_index]
        return tuple((tok, 0.0) for tok in tokens)

    def has_turn(self, turn_index: int) -> bool:
        """Whether a non-empty reply exists for this turn (silence guard)."""
        return turn_index < len(self.turns) and bool(self.turns[turn_index])

    def new_state(self) -> ScriptedLmState:
        return ScriptedLmState(tokens_per_second=self.tokens_per_second)

    def step(self, state: ScriptedLmState, turn_index: int,
             context: Sequence[Token]) -> Tuple[Token, float, ScriptedLmState]:
        if self.fail_at is not None and self.fail_at == (turn_index, state.cursor):
            raise BackendError(
                f"scripted generation fault at turn {turn_index} "
                f"step {state.cursor}")
        return scripted_lm_step(state, self.turn_script(turn_index), context)


# ---------------------------------------------------------------------------
# unit decoder


@dataclass(frozen=True)
class ScriptedDecoder:
    """Symbolic unit decoder: audio is a ref plus a duration."""

    profile: DecoderBackendProfile = DecoderBackendProfile()

    def synthesize(self, units: Sequence[Unit], chunk_index: int,
                   turn_index: int) -> str:
        return f"a{turn_index}.{chunk_index}"


def hybrid_reply(text_words: Sequence[str], units_per_word: int,
                 turn_index: int, unit_vocab_size: int) -> List[Token]:
    """Sugar for scripting hybrid replies: each word followed by its units."""
    tokens: List[Token] = []
    for w_i, word in enumerate(text_words):
        tokens.append(Text(word))
        for u_i in range(units_per_word):
            tokens.append(Unit(_stable_unit(
                f"t{turn_index}w{w_i}u{u_i}", unit_vocab_size)))
    return tokens
