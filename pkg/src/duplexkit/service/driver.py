"""Scenario replay: run a scripted session headlessly and check it.

The driver turns scenario events into inbound wire messages on a
simulated clock, runs the session to quiescence, and evaluates the
scenario's expectation records against the resulting trace. The same
machinery backs the `replay` CLI command and the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from ..core.clock import EventQueue, SimulatedClock
from ..core.latency import LatencyLedger
from ..core.tokens import Unit, token_text
from ..errors import ScenarioError
from ..frontend.asr import RESET_COMMAND
from ..scenario import Scenario, UserAudioEvent, UserTextEvent
from .session import ASYNC, BotTurnRecord, SessionRuntime
from .wire import WireMessage, format_trace

DEFAULT_GRACE_MS = 120_000


@dataclass
class SessionTrace:
    """Everything observable from one scripted run."""

    scenario_name: str
    mode: str
    inbound: List[WireMessage]
    outbound: List[WireMessage]
    actions: List[Tuple[int, object]]
    bot_turns: List[BotTurnRecord]
    ledgers: List[Tuple[int, LatencyLedger]]
    chunk_plans: List[Tuple[int, dict]]
    votes: List[dict]
    final_phase: str
    end_ms: int
    confirmed_words: List[str] = field(default_factory=list)
    context_unit_count: int = 0

    def outbound_kinds(self) -> List[str]:
        return [m.kind for m in self.outbound]

    def bot_transcript(self) -> str:
        return "".join(token_text(t.tokens) for t in self.bot_turns)

    def confirmed_outputs(self) -> List[dict]:
        """Per-turn confirmed token output, for cross-mode comparison."""
        return [{
            "turn": t.turn_index,
            "tokens": [m.payload["token"] for m in self.outbound
                       if m.kind == "bot_token"
                       and m.payload.get("turn") == t.turn_index],
            "completed": t.completed,
            "cancelled": t.cancelled,
        } for t in self.bot_turns]

    def first_token_latencies(self) -> List[Tuple[int, int]]:
        """(turn index, wire time of its first token) per machine turn."""
        return [(t.turn_index, t.first_token_t) for t in self.bot_turns
                if t.first_token_t is not None]

    def trace_text(self) -> str:
        entries = sorted(
            [(">", m) for m in self.inbound] + [("<", m) for m in self.outbound],
            key=lambda e: (e[1].t_ms, 0 if e[0] == ">" else 1, e[1].seq))
        return format_trace(entries)


def run_scenario(scenario: Scenario, mode: str = ASYNC,
                 horizon_ms: Optional[int] = None) -> SessionTrace:
    """Execute one scenario under the simulated clock."""
    clock = SimulatedClock()
    queue = EventQueue(clock)
    asr, encoder, lm, decoder = scenario.build_backends()
    runtime = SessionRuntime(
        config=scenario.config, queue=queue,
        asr_backend=asr, encoder_backend=encoder, lm_backend=lm,
        decoder_backend=decoder, mode=mode,
        user_modality=scenario.user_modality,
        machine_modality=scenario.machine_modality,
        hallucination_patterns=scenario.patterns)

    in_seq = [0]

    def deliver(kind: str, payload: dict):
        msg = WireMessage(kind=kind, t_ms=clock.now_ms, seq=in_seq[0],
                          payload=payload)
        in_seq[0] += 1
        runtime.inbound(msg)

    for ev in scenario.events:
        if isinstance(ev, UserAudioEvent):
            payload = {"chunk": ev.chunk_id}
            if ev.dur_ms is not None:
                payload["dur_ms"] = ev.dur_ms
            queue.at(ev.t_ms, lambda p=payload: deliver("user_audio_chunk", p))
        elif isinstance(ev, UserTextEvent):
            if ev.text == RESET_COMMAND:
                kind, payload = "reset_command", {"text": RESET_COMMAND}
            else:
                kind, payload = "user_text_chunk", {"text": ev.text}
            if ev.await_bot_tokens is None:
                queue.at(ev.t_ms, lambda k=kind, p=payload: deliver(k, p))
            else:
                def arm(ev=ev, kind=kind, payload=payload):
                    # fire one event-step after the anchor token, at the
                    # same simulated instant, in both turn-taking modes
                    runtime.add_token_watcher(
                        ev.await_bot_tokens,
                        lambda: queue.at(max(clock.now_ms, ev.t_ms),
                                         lambda: deliver(kind, payload)))
                queue.at(ev.t_ms, arm)
        else:
            raise ScenarioError(f"unplayable event {ev!r}")

    last_event_t = max((ev.t_ms for ev in scenario.events), default=0)
    limit = horizon_ms if horizon_ms is not None else \
        last_event_t + DEFAULT_GRACE_MS
    queue.run_until(limit)

    return SessionTrace(
        scenario_name=scenario.name,
        mode=mode,
        inbound=list(runtime.inbound_log),
        outbound=list(runtime.outbound),
        actions=list(runtime.action_trace),
        bot_turns=list(runtime.bot_turns),
        ledgers=list(runtime.ledgers),
        chunk_plans=list(runtime.chunk_plans),
        votes=list(runtime.votes),
        final_phase=runtime.turn_state.phase.value,
        end_ms=clock.now_ms,
        confirmed_words=[w.surface for w in runtime.asr_state.confirmed],
        context_unit_count=sum(
            1 for t in runtime.turn_state.context if isinstance(t, Unit)),
    )


# --------------------------------------------------------------- checking


def _is_subsequence(needle: Sequence[str], haystack: Sequence[str]) -> bool:
    it = iter(haystack)
    return all(any(x == h for h in it) for x in needle)


def check_expectations(scenario: Scenario, trace: SessionTrace) -> List[str]:
    """Evaluate the scenario's expect records; returns failure messages."""
    failures: List[str] = []
    kinds = trace.outbound_kinds()
    for exp in scenario.expectations:
        p = exp.params
        if exp.check == "kind_order":
            want = list(p.get("kinds", []))
            if not _is_subsequence(want, kinds):
                failures.append(
                    f"kind_order: {want} is not a subsequence of {kinds}")
        elif exp.check == "no_stale_bot_tokens":
            failures.extend(stale_token_violations(trace.outbound))
        elif exp.check == "min_count":
            kind, n = p.get("of"), int(p.get("n", 1))
            got = kinds.count(kind)
            if got < n:
                failures.append(f"min_count: {got} x {kind}, wanted >= {n}")
        elif exp.check == "max_count":
            kind, n = p.get("of"), int(p.get("n", 0))
            got = kinds.count(kind)
            if got > n:
                failures.append(f"max_count: {got} x {kind}, wanted <= {n}")
        elif exp.check == "transcript_contains":
            text = str(p.get("text", ""))
            if text not in trace.bot_transcript():
                failures.append(
                    f"transcript_contains: {text!r} not in "
                    f"{trace.bot_transcript()!r}")
        elif exp.check == "terminal_phase":
            want = str(p.get("phase"))
            if trace.final_phase != want:
                failures.append(
                    f"terminal_phase: {trace.final_phase} != {want}")
        elif exp.check == "confirmed_contains":
            text = str(p.get("text", ""))
            joined = "".join(trace.confirmed_words)
            if text not in joined:
                failures.append(
                    f"confirmed_contains: {text!r} not in {joined!r}")
        elif exp.check == "confirmed_excludes":
            text = str(p.get("text", ""))
            joined = "".join(trace.confirmed_words)
            if text in joined:
                failures.append(
                    f"confirmed_excludes: {text!r} found in {joined!r}")
        elif exp.check == "context_units":
            n = int(p.get("n", 0))
            if trace.context_unit_count != n:
                failures.append(
                    f"context_units: {trace.context_unit_count} != {n}")
    return failures


def stale_token_violations(outbound: Sequence[WireMessage]) -> List[str]:
    """Tokens or audio from a generation stream after its interrupt ack."""
    cancelled: set = set()
    failures: List[str] = []
    for msg in outbound:
        if msg.kind == "interrupt_ack":
            cancelled.add(msg.payload.get("cancelled_gen"))
        elif msg.kind in ("bot_token", "bot_audio_ref"):
            gen = msg.payload.get("gen")
            if gen in cancelled:
                failures.append(
                    f"stale {msg.kind} from cancelled generation {gen} "
                    f"at t={msg.t_ms}")
    return failures
