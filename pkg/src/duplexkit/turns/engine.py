"""Duplex turn-taking state machine.

Pure reducer over TurnState: every transition takes the state (plus the
current time) and returns a new state with a list of actions for the
session runtime to execute. The engine itself never talks to backends,
clocks, or sockets, which keeps every decision replayable.

Core behaviours:
  - end-of-turn detection by thresholding the model's end-of-turn
    probability over the accumulated context;
  - user barge-in: input arriving during generation cancels it in the
    same event-processing step, and the user content is spliced into the
    context right where the machine turn was cut;
  - speculative generation: every new user input invalidates the running
    unconfirmed session and requests a fresh one from the latest context
    snapshot; output is only confirmed once a turn-end signal fires;
  - silence-initiated turns once mutual silence exceeds the configured
    window.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

from ..core.tokens import (
    EOT,
    SPEAKER_MACHINE,
    SPEAKER_SYSTEM,
    SPEAKER_USER,
    EndOfTurn,
    Header,
    Text,
    Token,
)
from ..errors import BackendError, SnapshotMismatchError


class Phase(str, enum.Enum):
    IDLE = "Idle"
    USER_SPEAKING = "UserSpeaking"
    CHECKING = "Checking"
    BOT_GENERATING = "BotGenerating"


class Decision(str, enum.Enum):
    COMPLETE = "Complete"
    CONTINUE = "Continue"


@dataclass(frozen=True)
class CancelGeneration:
    """Stop the named generation stream before processing anything else."""

    session_id: int


@dataclass(frozen=True)
class StartSpeculative:
    """Begin (or restart) speculative generation from the context snapshot."""

    session_id: int
    snapshot_len: int


@dataclass(frozen=True)
class BotInitiate:
    """Open an unsolicited machine turn after sustained mutual silence."""

    session_id: int


Action = object  # CancelGeneration | StartSpeculative | BotInitiate


@dataclass(frozen=True)
class SpeculativeSession:
    """One generation attempt pinned to a context snapshot."""

    id: int
    prompt_snapshot_len: int
    started_at_ms: int
    generated: Tuple[Token, ...] = ()
    confirmed: bool = False


@dataclass(frozen=True)
class TurnState:
    """Full controller state; immutable, replaced on every transition."""

    phase: Phase
    context: Tuple[Token, ...]
    silence_since_ms: Optional[int]  # present iff phase is IDLE
    current_speaker: str = SPEAKER_SYSTEM
    active_generation_id: Optional[int] = None
    interruption_points: Tuple[int, ...] = ()
    next_session_id: int = 1


def new_turn_state(system_prompt: str, now_ms: int = 0) -> TurnState:
    """Fresh state whose context starts with the system-prompt tokens."""
    return TurnState(
        phase=Phase.IDLE,
        context=(Header(SPEAKER_SYSTEM), Text(system_prompt)),
        silence_since_ms=now_ms,
    )


def check_end_of_turn(lm, context: Sequence[Token], threshold: float,
                      on_error: Optional[Callable[[Exception], None]] = None
                      ) -> Decision:
    """Ask the model whether the pending input is a finished turn.

    Complete iff the end-of-turn probability of the next-token
    distribution is >= threshold. A backend failure degrades to Continue
    (keep listening) and is reported through ``on_error``.
    """
    if not context:
        raise ValueError("end-of-turn check requires a non-empty context")
    try:
        p = lm.eot_probability(tuple(context))
    except Exception as exc:
        if on_error is not None:
            on_error(exc if isinstance(exc, BackendError)
                     else BackendError(str(exc)))
        return Decision.CONTINUE
    return Decision.COMPLETE if p >= threshold else Decision.CONTINUE


def on_user_input(state: TurnState, session: Optional[SpeculativeSession],
                  tokens: Sequence[Token], now_ms: int
                  ) -> Tuple[TurnState, Optional[SpeculativeSession], List[Action]]:
    """Accept user tokens; the user always has priority.

    If the machine is mid-generation this cancels it first (same step).
    Any unconfirmed speculative session is discarded and a new one is
    requested from the updated context snapshot.
    """
    tokens = tuple(tokens)
    if not tokens:
        if state.phase is Phase.IDLE:
            state = replace(state, silence_since_ms=now_ms)
        return state, session, []

    actions: List[Action] = []
    context = state.context
    interruption_points = state.interruption_points
    active_id = state.active_generation_id

    if state.phase is Phase.BOT_GENERATING:
        if active_id is not None:
            actions.append(CancelGeneration(active_id))
        interruption_points = interruption_points + (len(context),)
        active_id = None

    if state.current_speaker != SPEAKER_USER:
        context = context + (Header(SPEAKER_USER),)
    context = context + tokens

    if session is not None and not session.confirmed:
        session = None  # restart semantics: stale speculation is discarded

    new_session = SpeculativeSession(
        id=state.next_session_id,
        prompt_snapshot_len=len(context),
        started_at_ms=now_ms,
    )
    actions.append(StartSpeculative(new_session.id, new_session.prompt_snapshot_len))

    new_state = replace(
        state,
        phase=Phase.USER_SPEAKING,
        context=context,
        silence_since_ms=None,
        current_speaker=SPEAKER_USER,
        active_generation_id=active_id,
        interruption_points=interruption_points,
        next_session_id=state.next_session_id + 1,
    )
    return new_state, new_session, actions


def begin_checking(state: TurnState) -> TurnState:
    """Mark that input paused and the controller is awaiting a turn-end."""
    if state.phase is not Phase.USER_SPEAKING:
        return state
    return replace(state, phase=Phase.CHECKING)


def on_silence_tick(state: TurnState, now_ms: int, silence_initiate_ms: int
                    ) -> Tuple[TurnState, List[Action]]:
    """Open a machine turn if mutual silence reached the configured window."""
    if state.phase is not Phase.IDLE or state.silence_since_ms is None:
        return state, []
    if now_ms - state.silence_since_ms < silence_initiate_ms:
        return state, []
    session_id = state.next_session_id
    new_state = replace(
        state,
        phase=Phase.BOT_GENERATING,
        silence_since_ms=None,
        context=state.context + (Header(SPEAKER_MACHINE),),
        current_speaker=SPEAKER_MACHINE,
        active_generation_id=session_id,
        next_session_id=session_id + 1,
    )
    return new_state, [BotInitiate(session_id)]


def extend_speculative(session: SpeculativeSession,
                       token: Token) -> SpeculativeSession:
    """Append a generated token to an unconfirmed session."""
    if session.confirmed:
        raise ValueError("confirmed sessions do not accumulate; append to context")
    return replace(session, generated=session.generated + (token,))


def confirm_speculative(state: TurnState, session: SpeculativeSession,
                        now_ms: int
                        ) -> Tuple[TurnState, SpeculativeSession, Tuple[Token, ...]]:
    """Commit a speculative session once a turn-end signal fired.

    The session must match the current context snapshot; anything newer
    in the context means user input invalidated it and the caller has to
    restart. The user turn is closed, the machine turn opens, and the
    tokens generated so far are returned for immediate downstream flush.
    """
    if session.prompt_snapshot_len != len(state.context):
        raise SnapshotMismatchError(
            f"session {session.id} snapshot ({session.prompt_snapshot_len}) "
            f"does not match context length ({len(state.context)})")
    confirmed = replace(session, confirmed=True)
    context = state.context
    if state.current_speaker == SPEAKER_USER:
        context = context + (EOT,)  # close the user turn
    context = context + (Header(SPEAKER_MACHINE),) + confirmed.generated
    new_state = replace(
        state,
        phase=Phase.BOT_GENERATING,
        silence_since_ms=None,
        context=context,
        current_speaker=SPEAKER_MACHINE,
        active_generation_id=confirmed.id,
    )
    return new_state, confirmed, confirmed.generated


def append_bot_token(state: TurnState, token: Token, now_ms: int
                     ) -> Tuple[TurnState, bool]:
    """Append one live generated token; returns (state, turn finished)."""
    if state.phase is not Phase.BOT_GENERATING:
        raise ValueError(f"no machine turn open (phase {state.phase.value})")
    context = state.context + (token,)
    if isinstance(token, EndOfTurn):
        return replace(
            state,
            phase=Phase.IDLE,
            context=context,
            silence_since_ms=now_ms,
            active_generation_id=None,
        ), True
    return replace(state, context=context), False


def finish_bot_turn(state: TurnState, now_ms: int) -> TurnState:
    """Close the machine turn without an explicit end token (cancellation)."""
    if state.phase is not Phase.BOT_GENERATING:
        return state
    return replace(state, phase=Phase.IDLE, silence_since_ms=now_ms,
                   active_generation_id=None)
