"""Line-delimited wire protocol.

One message per line of UTF-8 JSON, newline terminated, no interior
newlines (JSON escaping guarantees this). Each message carries a kind, a
millisecond timestamp, a per-direction strictly increasing sequence
number, and a kind-specific payload. Encoding is canonical (sorted keys,
compact separators) so traces are byte-stable golden files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, List, Tuple

from ..errors import ProtocolError, WireDecodeError

INBOUND_KINDS = ("user_text_chunk", "user_audio_chunk", "reset_command",
                 "feedback")
OUTBOUND_KINDS = ("bot_token", "bot_text", "bot_audio_ref", "eot_detected",
                  "interrupt_ack", "bot_initiate", "state_update",
                  "latency_report", "chunk_plan", "error")
KINDS = INBOUND_KINDS + OUTBOUND_KINDS

RESET_PAYLOAD_TEXT = "==="


@dataclass(frozen=True)
class WireMessage:
    kind: str
    t_ms: int
    seq: int
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise WireDecodeError(f"unknown message kind {self.kind!r}")
        if self.t_ms < 0 or self.seq < 0:
            raise WireDecodeError("t_ms and seq must be non-negative")
        if self.kind == "reset_command":
            if self.payload.get("text") != RESET_PAYLOAD_TEXT:
                raise WireDecodeError(
                    f'reset_command payload must be exactly '
                    f'"{RESET_PAYLOAD_TEXT}"')


def encode_message(msg: WireMessage) -> bytes:
    """One canonical JSON line; decode(encode(m)) == m."""
    try:
        line = json.dumps(
            {"kind": msg.kind, "t": msg.t_ms, "seq": msg.seq,
             "payload": msg.payload},
            ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    except (TypeError, ValueError) as exc:
        raise WireDecodeError(f"unencodable payload: {exc}") from exc
    if "\n" in line or "\r" in line:  # json escapes these; belt and braces
        raise WireDecodeError("encoded message contains a newline")
    return (line + "\n").encode("utf-8")


def decode_message(line: bytes) -> WireMessage:
    """Parse one complete line into a validated message."""
    if isinstance(line, bytes):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireDecodeError(f"not UTF-8: {exc}") from exc
    else:
        text = line
    text = text.strip("\r\n")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WireDecodeError(f"malformed message: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise WireDecodeError("message must be a JSON object")
    for key in ("kind", "t", "seq"):
        if key not in obj:
            raise WireDecodeError(f"message missing {key!r}")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise WireDecodeError("payload must be an object")
    try:
        return WireMessage(kind=obj["kind"], t_ms=int(obj["t"]),
                           seq=int(obj["seq"]), payload=payload)
    except (TypeError, ValueError) as exc:
        raise WireDecodeError(str(exc)) from exc


class SequenceGate:
    """Per-direction strictly increasing sequence enforcement."""

    def __init__(self, direction: str):
        self.direction = direction
        self.last = -1

    def check(self, msg: WireMessage) -> WireMessage:
        if msg.seq <= self.last:
            raise ProtocolError(
                f"{self.direction} sequence regressed: {msg.seq} after "
                f"{self.last}")
        self.last = msg.seq
        return msg


# --- trace files -----------------------------------------------------------
# One line per message: a direction prefix ('>' client-to-server,
# '<' server-to-client), the timestamp, then the exact wire line.

def format_trace_line(direction: str, msg: WireMessage) -> str:
    if direction not in (">", "<"):
        raise ValueError("direction must be '>' or '<'")
    return f"{direction} {msg.t_ms} " + encode_message(msg).decode("utf-8")


def format_trace(entries: Iterable[Tuple[str, WireMessage]]) -> str:
    return "".join(format_trace_line(d, m) for d, m in entries)


def parse_trace(text: str) -> List[Tuple[str, WireMessage]]:
    entries: List[Tuple[str, WireMessage]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            direction, _, rest = raw.partition(" ")
            _, _, line = rest.partition(" ")
            if direction not in (">", "<"):
                raise WireDecodeError(f"bad direction prefix {direction!r}")
            entries.append((direction, decode_message(line)))
        except WireDecodeError as exc:
            raise WireDecodeError(f"trace line {lineno}: {exc}") from exc
    return entries
