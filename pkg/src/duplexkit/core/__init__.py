"""Shared domain types, configuration, clocks, and latency accounting."""

from .clock import EventQueue, SimulatedClock, WallClock
from .config import SessionConfig, config_from_mapping, load_config, parse_config_text
from .latency import (
    ASR_INTERLEAVE,
    ASYNCHRONOUS,
    COMPONENTS,
    DECODER_FIRST_CHUNK,
    LLM_FIRST_TOKEN,
    SYNCHRONOUS,
    TURN_WAIT,
    LatencyLedger,
    latency_bound,
    ledger_from_spans,
    record_span,
)
from .tokens import (
    EOT,
    SPEAKER_MACHINE,
    SPEAKER_SYSTEM,
    SPEAKER_USER,
    EndOfTurn,
    Header,
    Modality,
    Text,
    TimedWord,
    Token,
    Unit,
    token_from_json,
    token_text,
    token_to_json,
    validate_unit,
)

__all__ = [
    "EventQueue", "SimulatedClock", "WallClock",
    "SessionConfig", "config_from_mapping", "load_config", "parse_config_text",
    "ASR_INTERLEAVE", "ASYNCHRONOUS", "COMPONENTS", "DECODER_FIRST_CHUNK",
    "LLM_FIRST_TOKEN", "SYNCHRONOUS", "TURN_WAIT",
    "LatencyLedger", "latency_bound", "ledger_from_spans", "record_span",
    "EOT", "SPEAKER_MACHINE", "SPEAKER_SYSTEM", "SPEAKER_USER",
    "EndOfTurn", "Header", "Modality", "Text", "TimedWord", "Token", "Unit",
    "token_from_json", "token_text", "token_to_json", "validate_unit",
]
