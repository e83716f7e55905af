"""Network face: WebSocket sessions speaking the line protocol.

Each connection owns one session. Two transport modes:

  sim   lock-step replay: the client's message timestamps drive the
        simulated clock; after each inbound message the event queue runs
        to quiescence, so traces are deterministic and golden-testable;
  live  wall-clock sessions: a pump task dispatches the session's event
        queue against real time, so cadences, turn-wait caps, and chunk
        schedules play out in real milliseconds.

Every frame is exactly one wire line. Feedback messages are appended to
a votes log. With recording enabled the full bidirectional byte stream
is written as a trace file.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..backends import ScriptedAsr, ScriptedDecoder, ScriptedEncoder
from ..core.clock import EventQueue, SimulatedClock
from ..core.config import SessionConfig
from ..core.tokens import EOT, Text
from ..errors import ProtocolError, WireDecodeError
from ..scenario import Scenario
from .session import ASYNC, SessionRuntime
from .wire import (
    SequenceGate,
    WireMessage,
    decode_message,
    encode_message,
    format_trace_line,
)


class EchoLm:
    """Fallback conversational model for live demo sessions.

    Replies by reading back the pending user text; deterministic, no
    wall-clock access, slow enough (20 tokens/s) to barge into.
    """

    tokens_per_second = 20
    first_token_delay_ms = 300

    @dataclass(frozen=True)
    class State:
        cursor: int = 0
        reply: Optional[tuple] = None
        tokens_per_second: int = 20

        @property
        def step_interval_ms(self) -> int:
            return 1000 // self.tokens_per_second

    def eot_probability(self, context) -> float:
        from ..backends import pending_user_segment
        return 0.9 if pending_user_segment(context) else 0.0

    def has_turn(self, turn_index: int) -> bool:
        return False  # echoes only; never fills silence unprompted

    def new_state(self) -> "EchoLm.State":
        return EchoLm.State(tokens_per_second=self.tokens_per_second)

    @staticmethod
    def _last_user_words(context) -> list:
        from ..core.tokens import Header
        segments: list = []
        current = None
        for tok in context:
            if isinstance(tok, Header):
                current = [] if tok.speaker == "User" else None
                if current is not None:
                    segments.append(current)
            elif current is not None and isinstance(tok, Text):
                current.append(tok)
        return segments[-1] if segments else []

    def step(self, state: "EchoLm.State", turn_index: int, context):
        if state.reply is None:
            heard = self._last_user_words(context)
            words = [Text(t.surface) for t in heard] or [Text("...")]
            reply = tuple([Text("你說:")] + words)
            state = EchoLm.State(cursor=0, reply=reply,
                                 tokens_per_second=state.tokens_per_second)
        if state.cursor >= len(state.reply):
            return EOT, 1.0, state
        token = state.reply[state.cursor]
        return token, 0.0, EchoLm.State(
            cursor=state.cursor + 1, reply=state.reply,
            tokens_per_second=state.tokens_per_second)


@dataclass
class ServerOptions:
    mode: str = "sim"                  # sim | live
    config: SessionConfig = field(default_factory=SessionConfig)
    scenario: Optional[Scenario] = None
    engine_mode: str = ASYNC           # sync | async turn-taking
    record_path: Optional[Path] = None
    votes_path: Optional[Path] = None
    patterns: tuple = ()


class SessionRegistry:
    """Open sessions; the only state shared across connections."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counter = itertools.count()
        self._open: Dict[str, str] = {}

    def open(self, mode: str) -> str:
        with self._lock:
            session_id = f"s{next(self._counter)}"
            self._open[session_id] = mode
            return session_id

    def close(self, session_id: str) -> None:
        with self._lock:
            self._open.pop(session_id, None)

    def active(self) -> Dict[str, str]:
        with self._lock:
            return dict(self._open)


def _build_runtime(options: ServerOptions, queue: EventQueue,
                   session_id: str, on_message) -> SessionRuntime:
    config = options.config
    if options.scenario is not None:
        config = options.scenario.config
        asr, encoder, lm, decoder = options.scenario.build_backends()
        patterns = options.scenario.patterns
    else:
        asr = ScriptedAsr(())
        encoder = ScriptedEncoder(unit_vocab_size=config.unit_vocab_size,
                                  unit_t_ms=config.unit_t_ms)
        lm = EchoLm()
        decoder = ScriptedDecoder()
        patterns = tuple(options.patterns)
    return SessionRuntime(
        config=config, queue=queue, asr_backend=asr, encoder_backend=encoder,
        lm_backend=lm, decoder_backend=decoder, mode=options.engine_mode,
        hallucination_patterns=patterns, on_message=on_message,
        session_id=session_id)


def build_app(options: Optional[ServerOptions] = None) -> FastAPI:
    options = options or ServerOptions()
    app = FastAPI(title="duplexkit session service")
    registry = SessionRegistry()
    app.state.registry = registry
    record_lock = threading.Lock()

    def record(direction: str, msg: WireMessage):
        if options.record_path is None:
            return
        with record_lock:
            with open(options.record_path, "a", encoding="utf-8") as fh:
                fh.write(format_trace_line(direction, msg))

    def log_votes(session_id: str, payload: dict):
        if options.votes_path is None:
            return
        entry = dict(payload)
        entry["session"] = session_id
        with record_lock:
            with open(options.votes_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False,
                                    sort_keys=True) + "\n")

    @app.get("/sessions")
    def sessions():
        return registry.active()

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        session_id = registry.open(options.mode)
        try:
            if options.mode == "live":
                await _live_session(ws, options, session_id, record, log_votes)
            else:
                await _sim_session(ws, options, session_id, record, log_votes)
        except WebSocketDisconnect:
            pass
        finally:
            registry.close(session_id)

    return app


async def _sim_session(ws: WebSocket, options: ServerOptions,
                       session_id: str, record, log_votes):
    clock = SimulatedClock()
    queue = EventQueue(clock)
    outbox = []

    def on_message(msg: WireMessage):
        outbox.append(msg)
        record("<", msg)

    runtime = _build_runtime(options, queue, session_id, on_message)
    gate = SequenceGate("inbound")

    async def flush():
        while outbox:
            await ws.send_text(encode_message(outbox.pop(0)).decode("utf-8"))

    await flush()
    while True:
        try:
            raw = await ws.receive_text()
        except WebSocketDisconnect:
            break
        try:
            msg = gate.check(decode_message(raw))
            record(">", msg)
            if msg.t_ms > clock.now_ms:
                queue.run_until(msg.t_ms)
            if msg.kind == "feedback":
                log_votes(session_id, msg.payload)
            runtime.inbound(msg)
            queue.run_all()
        except WireDecodeError as exc:
            runtime._emit_error("decode", str(exc))
        except ProtocolError as exc:
            runtime._emit_error("protocol", str(exc))
            await flush()
            await ws.close(code=1002)
            return
        await flush()


async def _live_session(ws: WebSocket, options: ServerOptions,
                        session_id: str, record, log_votes):
    clock = SimulatedClock()  # slaved to the wall clock by the pump
    queue = EventQueue(clock)
    loop = asyncio.get_running_loop()
    outq: asyncio.Queue = asyncio.Queue()
    wake = asyncio.Event()
    origin = time.monotonic()

    def wall_ms() -> int:
        return int((time.monotonic() - origin) * 1000)

    def on_message(msg: WireMessage):
        outq.put_nowait(msg)
        record("<", msg)

    runtime = _build_runtime(options, queue, session_id, on_message)
    gate = SequenceGate("inbound")
    closed = False

    async def pump():
        while not closed:
            now = wall_ms()
            queue.run_until(now)
            nt = queue.next_time()
            if nt is None:
                wake.clear()
                try:
                    await asyncio.wait_for(wake.wait(), timeout=0.25)
                except asyncio.TimeoutError:
                    pass
            else:
                await asyncio.sleep(max(0.0, (nt - wall_ms()) / 1000))

    async def sender():
        while True:
            msg = await outq.get()
            await ws.send_text(encode_message(msg).decode("utf-8"))

    pump_task = asyncio.create_task(pump())
    sender_task = asyncio.create_task(sender())
    try:
        while True:
            raw = await ws.receive_text()
            now = wall_ms()
            if now > clock.now_ms:
                queue.run_until(now)
            try:
                msg = gate.check(decode_message(raw))
                msg = WireMessage(kind=msg.kind, t_ms=clock.now_ms,
                                  seq=msg.seq, payload=msg.payload)
                record(">", msg)
                if msg.kind == "feedback":
                    log_votes(session_id, msg.payload)
                runtime.inbound(msg)
                wake.set()
            except WireDecodeError as exc:
                runtime._emit_error("decode", str(exc))
            except ProtocolError as exc:
                runtime._emit_error("protocol", str(exc))
                break
    except WebSocketDisconnect:
        pass
    finally:
        closed = True
        pump_task.cancel()
        await asyncio.sleep(0)
        # drain whatever the sender still holds, then stop it
        while not outq.empty():
            try:
                await ws.send_text(
                    encode_message(outq.get_nowait()).decode("utf-8"))
            except Exception:
                break
        sender_task.cancel()
