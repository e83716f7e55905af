"""Session service: wire protocol, session runtime, replay driver, server."""

from .driver import SessionTrace, check_expectations, run_scenario, stale_token_violations
from .session import ASYNC, SYNC, BotTurnRecord, GenTask, SessionRuntime
from .wire import (
    INBOUND_KINDS,
    KINDS,
    OUTBOUND_KINDS,
    SequenceGate,
    WireMessage,
    decode_message,
    encode_message,
    format_trace,
    format_trace_line,
    parse_trace,
)

__all__ = [
    "SessionTrace", "check_expectations", "run_scenario",
    "stale_token_violations", "ASYNC", "SYNC", "BotTurnRecord", "GenTask",
    "SessionRuntime", "INBOUND_KINDS", "KINDS", "OUTBOUND_KINDS",
    "SequenceGate", "WireMessage", "decode_message", "encode_message",
    "format_trace", "format_trace_line", "parse_trace",
]
