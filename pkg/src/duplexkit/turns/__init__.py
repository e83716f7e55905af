"""Duplex turn-taking: state machine, prompts, interruption encoding."""

from .engine import (
    Action,
    BotInitiate,
    CancelGeneration,
    Decision,
    Phase,
    SpeculativeSession,
    StartSpeculative,
    TurnState,
    append_bot_token,
    begin_checking,
    check_end_of_turn,
    confirm_speculative,
    extend_speculative,
    finish_bot_turn,
    new_turn_state,
    on_silence_tick,
    on_user_input,
)
from .interruption import InterruptionSplit, decode_interruption, encode_interruption
from .prompts import format_system_prompt, modality_prefix

__all__ = [
    "Action", "BotInitiate", "CancelGeneration", "Decision", "Phase",
    "SpeculativeSession", "StartSpeculative", "TurnState", "append_bot_token",
    "begin_checking", "check_end_of_turn", "confirm_speculative",
    "extend_speculative", "finish_bot_turn", "new_turn_state",
    "on_silence_tick", "on_user_input", "InterruptionSplit",
    "decode_interruption", "encode_interruption", "format_system_prompt",
    "modality_prefix",
]
