"""Agent-versus-agent conversations.

Two engine sessions are coupled back to back on one simulated clock:
whatever one agent says (its completed turn text) is fed to the other as
user input through the full duplex pipeline. The loop ends at a turn
budget, on sustained mutual silence (both scripts exhausted, no pending
events), or on an agent error, always preserving the partial transcript.

The first word belongs to whichever agent's silence initiator fires
first, exactly as a lone session would start talking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..backends import ScriptedAsr, ScriptedDecoder, ScriptedEncoder, ScriptedLm
from ..core.clock import EventQueue, SimulatedClock
from ..core.config import SessionConfig
from ..core.tokens import Token, token_text
from ..service.session import ASYNC, SessionRuntime
from ..service.wire import WireMessage

MAX_TURNS = "max_turns"
SILENCE = "silence"
ERROR = "error"


@dataclass(frozen=True)
class AgentSpec:
    """One forum participant: a role prompt plus its scripted model."""

    agent_id: str
    system_prompt: str
    lm: ScriptedLm
    config: SessionConfig = SessionConfig()


@dataclass(frozen=True)
class ForumTurn:
    agent_id: str
    tokens: Tuple[Token, ...]
    started_ms: int
    ended_ms: int

    @property
    def text(self) -> str:
        return token_text(self.tokens)


@dataclass
class ForumTranscript:
    scenario: str
    turns: List[ForumTurn] = field(default_factory=list)
    termination_reason: str = SILENCE
    errors: List[str] = field(default_factory=list)
    mos: Optional[float] = None  # attached by external quality raters

    def dialogue_text(self) -> str:
        return "\n".join(f"{t.agent_id}: {t.text}" for t in self.turns)

    def to_records(self) -> List[dict]:
        """Line-delimited export: one header record plus one per turn."""
        from ..core.tokens import token_to_json
        head = {"kind": "forum", "scenario": self.scenario,
                "termination": self.termination_reason,
                "turns": len(self.turns), "errors": self.errors}
        if self.mos is not None:
            head["mos"] = self.mos
        records = [head]
        for i, turn in enumerate(self.turns):
            records.append({
                "kind": "forum_turn", "index": i, "agent": turn.agent_id,
                "started_ms": turn.started_ms, "ended_ms": turn.ended_ms,
                "text": turn.text,
                "tokens": [token_to_json(t) for t in turn.tokens],
            })
        return records

    def to_jsonl(self) -> str:
        import json
        return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n"
                       for r in self.to_records())


def run_forum(agent_a: AgentSpec, agent_b: AgentSpec, scenario: str,
              max_turns: int, clock: Optional[SimulatedClock] = None,
              mode: str = ASYNC, max_events: int = 500_000) -> ForumTranscript:
    """Couple two sessions and record the conversation."""
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    clock = clock or SimulatedClock()
    queue = EventQueue(clock)
    transcript = ForumTranscript(scenario=scenario)

    runtimes: dict = {}
    seqs = {agent_a.agent_id: 0, agent_b.agent_id: 0}
    peers = {agent_a.agent_id: agent_b.agent_id,
             agent_b.agent_id: agent_a.agent_id}
    state = {"turns": 0, "stopped": False, "reason": SILENCE}

    def deliver(agent_id: str, text: str):
        if state["stopped"] or not text:
            return
        runtime = runtimes[agent_id]
        msg = WireMessage(kind="user_text_chunk", t_ms=clock.now_ms,
                          seq=seqs[agent_id], payload={"text": text})
        seqs[agent_id] += 1
        runtime.inbound(msg)

    def make_listener(agent_id: str):
        def on_message(msg: WireMessage):
            if msg.kind == "error":
                transcript.errors.append(
                    f"{agent_id}: {msg.payload.get('message')}")
                state["stopped"] = True
                state["reason"] = ERROR
                return
            if msg.kind != "bot_text" or state["stopped"]:
                return
            record = runtimes[agent_id].bot_turns[-1]
            if not token_text(record.tokens):
                return  # an exhausted script yields silence, not a turn
            transcript.turns.append(ForumTurn(
                agent_id=agent_id,
                tokens=tuple(record.tokens),
                started_ms=record.confirm_t or msg.t_ms,
                ended_ms=msg.t_ms))
            state["turns"] += 1
            if state["turns"] >= max_turns:
                state["stopped"] = True
                state["reason"] = MAX_TURNS
                return
            text = token_text(record.tokens)
            peer = peers[agent_id]
            queue.at(clock.now_ms, lambda: deliver(peer, text))
        return on_message

    for spec in (agent_a, agent_b):
        runtimes[spec.agent_id] = SessionRuntime(
            config=spec.config, queue=queue,
            asr_backend=ScriptedAsr(()),
            encoder_backend=ScriptedEncoder(
                unit_vocab_size=spec.config.unit_vocab_size,
                unit_t_ms=spec.config.unit_t_ms),
            lm_backend=spec.lm,
            decoder_backend=ScriptedDecoder(),
            mode=mode,
            system_prompt=spec.system_prompt,
            on_message=make_listener(spec.agent_id),
            session_id=spec.agent_id)

    events = 0
    while not state["stopped"] and queue.step():
        events += 1
        if events > max_events:
            raise RuntimeError("forum exceeded its event budget")
    transcript.termination_reason = state["reason"]
    return transcript
