"""Session runtime: one duplex conversation on one event loop.

Wires the whole pipeline together: inbound wire messages flow through the
recognizer/unit/interleave frontend into the turn engine; engine actions
become generation tasks, chunk-scheduler streams, and outbound wire
messages. Everything is driven by a single EventQueue over a simulated
(or wall) clock, so a scripted session replays byte-identically.

Turn-taking modes:
  sync   generation starts only after the end-of-turn decision
  async  generation restarts speculatively on every input and its output
         is confirmed (and only then emitted) when the turn-end fires

Cancellation contract: a CancelGeneration action is honored before any
further output of that generation session; pending emissions and audio
are dropped, so no cancelled token ever reaches the wire after the
interrupt acknowledgement.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

from ..backends import ScriptedLmState
from ..core.clock import EventHandle, EventQueue
from ..core.config import SessionConfig
from ..core.latency import (
    ASYNCHRONOUS,
    SYNCHRONOUS,
    LatencyLedger,
    latency_bound,
    ledger_from_spans,
)
from ..core.tokens import (
    EndOfTurn,
    Modality,
    Text,
    Token,
    Unit,
    token_text,
    token_to_json,
)
from ..errors import BackendError, ProtocolError
from ..frontend.asr import (
    RESET_COMMAND,
    asr_ingest,
    asr_reset,
    asr_trim,
    new_asr_state,
)
from ..frontend.audio import AudioChunk
from ..frontend.interleave import InterleaveState, interleave
from ..frontend.units import TimedUnit, new_unit_buffer, unit_push
from ..scheduler import DynamicChunker
from ..turns.engine import (
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
    new_turn_state,
    on_silence_tick,
    on_user_input,
)
from ..turns.prompts import format_system_prompt
from .wire import SequenceGate, WireMessage

SYNC = "sync"
ASYNC = "async"

DEFAULT_ROLE = "You are a ChatBot. Have a fun chat with the user."


@dataclass
class GenTask:
    """One generation session being executed by the runtime."""

    session: SpeculativeSession
    turn_index: int
    lm_state: ScriptedLmState
    started_at_ms: int
    confirmed: bool = False
    cancelled: bool = False
    emitted: int = 0                 # tokens emitted on the wire
    first_token_at: Optional[int] = None
    handle: Optional[EventHandle] = None


@dataclass
class BotTurnRecord:
    """Wire-level record of one machine turn for traces and tests."""

    turn_index: int
    gen_id: int
    initiated: bool = False
    confirm_t: Optional[int] = None
    first_token_t: Optional[int] = None
    tokens: List[Token] = field(default_factory=list)
    completed: bool = False
    cancelled: bool = False


class SessionRuntime:
    """Deterministic duplex session over scripted (or real) backends."""

    def __init__(self, config: SessionConfig, queue: EventQueue,
                 asr_backend, encoder_backend, lm_backend, decoder_backend,
                 mode: str = ASYNC,
                 system_prompt: Optional[str] = None,
                 user_modality: Modality = Modality.HYBRID,
                 machine_modality: Modality = Modality.HYBRID,
                 priming_units: int = 1,
                 hallucination_patterns: Sequence[str] = (),
                 on_message: Optional[Callable[[WireMessage], None]] = None,
                 session_id: str = "s0"):
        if mode not in (SYNC, ASYNC):
            raise ValueError(f"mode must be {SYNC!r} or {ASYNC!r}")
        self.config = config
        self.queue = queue
        self.clock = queue.clock
        self.asr_backend = asr_backend
        self.encoder_backend = encoder_backend
        self.lm = lm_backend
        self.decoder = decoder_backend
        self.mode = mode
        self.priming_units = priming_units
        self.on_message = on_message
        self.session_id = session_id

        self.user_modality = user_modality
        prompt = system_prompt if system_prompt is not None else \
            format_system_prompt(user_modality, machine_modality, DEFAULT_ROLE)
        self.turn_state: TurnState = new_turn_state(prompt, self.clock.now_ms)
        self.speculative: Optional[SpeculativeSession] = None
        self.gen: Optional[GenTask] = None

        self.asr_state = new_asr_state(hallucination_patterns)
        self.unit_buffer = new_unit_buffer(config)
        self.il_state = InterleaveState()
        self.unit_log: List[TimedUnit] = []
        self.audio_inbox: List[AudioChunk] = []
        self.next_audio_start_ms = 0
        self._poll_handle: Optional[EventHandle] = None
        self._poll_n = 0

        self.chunker: Optional[DynamicChunker] = None
        self._turn_handles: List[EventHandle] = []
        self._cut_handle: Optional[EventHandle] = None
        self._cap_handle: Optional[EventHandle] = None
        self._silence_handle: Optional[EventHandle] = None

        self.bot_turns_completed = 0
        self.bot_tokens_emitted = 0
        self._token_watchers: List[Tuple[int, Callable[[], None]]] = []

        self.outbound: List[WireMessage] = []
        self.inbound_log: List[WireMessage] = []
        self.action_trace: List[Tuple[int, object]] = []
        self.bot_turns: List[BotTurnRecord] = []
        self.ledgers: List[Tuple[int, LatencyLedger]] = []
        self.chunk_plans: List[Tuple[int, dict]] = []
        self.votes: List[dict] = []
        self._out_seq = 0
        self._in_gate = SequenceGate("inbound")

        self._last_state_payload: Optional[dict] = None
        self._last_input_batch_t: Optional[int] = None
        self._last_batch_word_end: Optional[int] = None
        self._turn_first_unit_t: Optional[int] = None
        self._turn_first_audio_ready: Optional[int] = None
        self._turn_asr_span = 0
        self._turn_wait = 0

        self._arm_silence_timer()
        self._emit_state_update()

    # ----------------------------------------------------------- outbound

    def _emit(self, kind: str, payload: dict) -> WireMessage:
        msg = WireMessage(kind=kind, t_ms=self.clock.now_ms,
                          seq=self._out_seq, payload=payload)
        self._out_seq += 1
        self.outbound.append(msg)
        if self.on_message is not None:
            self.on_message(msg)
        return msg

    def _emit_state_update(self):
        payload = {
            "phase": self.turn_state.phase.value,
            "context_len": len(self.turn_state.context),
            "buffered_chunks": len(self.asr_state.buffered),
            "confirmed_words": len(self.asr_state.confirmed),
        }
        if payload == self._last_state_payload:
            return
        self._last_state_payload = payload
        self._emit("state_update", payload)

    def _emit_error(self, code: str, message: str):
        self._emit("error", {"code": code, "message": message})

    def _trace(self, action: object):
        self.action_trace.append((self.clock.now_ms, action))

    # ----------------------------------------------------------- inbound

    def inbound(self, msg: WireMessage) -> None:
        """Process one client message at the current simulated time."""
        self._in_gate.check(msg)
        self.inbound_log.append(msg)
        if msg.kind == "user_text_chunk":
            text = str(msg.payload.get("text", ""))
            if text == RESET_COMMAND:
                self._reset("command")
                return
            tokens = tuple(Text(w) for w in text.split())
            self._user_tokens(tokens)
        elif msg.kind == "user_audio_chunk":
            self._user_audio(msg)
        elif msg.kind == "reset_command":
            self._reset("command")
        elif msg.kind == "feedback":
            self.votes.append(dict(msg.payload))
        else:
            raise ProtocolError(f"client may not send {msg.kind!r}")

    # ------------------------------------------------------- audio front

    def _user_audio(self, msg: WireMessage) -> None:
        dur = int(msg.payload.get("dur_ms", self.config.unit_chunk_ms))
        chunk = AudioChunk(id=str(msg.payload.get("chunk", f"c{len(self.unit_log)}")),
                           start_ms=self.next_audio_start_ms, dur_ms=dur)
        self.next_audio_start_ms = chunk.end_ms
        try:
            self.unit_buffer, frame = unit_push(
                self.unit_buffer, chunk, self.encoder_backend, self.config)
        except (BackendError, ValueError) as exc:
            self._emit_error("encoder", str(exc))
            return
        self.unit_log.extend(frame)
        if self.user_modality is Modality.UNIT:
            # unit-only sessions skip recognition: extracted units feed
            # the engine directly, one batch per chunk
            self._user_tokens(tuple(tu.unit for tu in frame))
            return
        self.audio_inbox.append(chunk)
        self._schedule_poll()

    def _schedule_poll(self):
        if self._poll_handle is not None and not self._poll_handle.cancelled:
            return
        cadence = self.config.asr_cadence_ms
        now = self.clock.now_ms
        # next cadence boundary; a boundary hit polls late, after arrivals
        next_poll = now if now % cadence == 0 else ((now // cadence) + 1) * cadence
        self._poll_handle = self.queue.at(next_poll, self._poll, late=True)

    def _poll(self):
        self._poll_handle = None
        self._poll_n += 1
        if self.audio_inbox:
            first = self.audio_inbox[0]
            segment = AudioChunk(
                id=f"seg{self._poll_n}", start_ms=first.start_ms,
                dur_ms=sum(c.dur_ms for c in self.audio_inbox))
            self.audio_inbox.clear()
        else:
            segment = AudioChunk(id=f"seg{self._poll_n}",
                                 start_ms=self.next_audio_start_ms, dur_ms=0)
        try:
            self.asr_state, newly = asr_ingest(self.asr_state, segment,
                                               self.asr_backend)
        except BackendError as exc:
            self._emit_error("asr", str(exc))
            self.asr_state = asr_reset(self.asr_state, "hallucination")
            self._emit_state_update()
            return
        self.asr_state = asr_trim(self.asr_state, self.config.asr_trim_window_s)
        if newly:
            self._last_batch_word_end = newly[-1].end_ms
            self.il_state, tokens = interleave(
                self.il_state, newly, self.unit_log,
                gap_cap_ms=self.config.gap_recovery_max_ms)
            self._user_tokens(tuple(tokens))
        stable = (self.asr_state.n_prev_confirmed
                  >= len(self.asr_state.prev_hypothesis))
        if not stable or self.audio_inbox:
            self._poll_handle = self.queue.after(self.config.asr_cadence_ms,
                                                 self._poll, late=True)

    # ---------------------------------------------------------- user path

    def _user_tokens(self, tokens: Tuple[Token, ...]) -> None:
        now = self.clock.now_ms
        self._cancel_silence_timer()
        state, session, actions = on_user_input(
            self.turn_state, self.speculative, tokens, now)
        self.turn_state = state
        self.speculative = session
        for action in actions:
            self._trace(action)
            if isinstance(action, CancelGeneration):
                self._cancel_generation(action.session_id)
            elif isinstance(action, StartSpeculative):
                self._handle_start_speculative(session)
        if not tokens:
            self._arm_silence_timer()
            return
        self._last_input_batch_t = now
        self._after_batch_check()
        self._emit_state_update()

    def _after_batch_check(self):
        decision = check_end_of_turn(
            self.lm, self.turn_state.context, self.config.eot_threshold,
            on_error=lambda exc: self._emit_error("lm_eot", str(exc)))
        if decision is Decision.COMPLETE:
            p = self._safe_eot_probability()
            self._confirm_turn(p=p, forced=False)
        else:
            self.turn_state = begin_checking(self.turn_state)
            self._arm_cap_timer()

    def _safe_eot_probability(self) -> Optional[float]:
        try:
            return self.lm.eot_probability(self.turn_state.context)
        except Exception:
            return None

    def _arm_cap_timer(self):
        self._cancel_cap_timer()
        self._cap_handle = self.queue.after(self.config.turn_wait_cap_ms,
                                            self._cap_fired, late=True)

    def _cancel_cap_timer(self):
        if self._cap_handle is not None:
            self._cap_handle.cancel()
            self._cap_handle = None

    def _cap_fired(self):
        self._cap_handle = None
        if self.turn_state.phase not in (Phase.CHECKING, Phase.USER_SPEAKING):
            return
        if self.speculative is None:
            return
        self._confirm_turn(p=None, forced=True)

    # ------------------------------------------------------- turn control

    def _confirm_turn(self, p: Optional[float], forced: bool):
        now = self.clock.now_ms
        self._cancel_cap_timer()
        session = self.speculative
        if session is None:
            return
        self._emit("eot_detected", {"p": p, "forced": forced})
        self._turn_wait = now - (self._last_input_batch_t
                                 if self._last_input_batch_t is not None else now)
        self._turn_asr_span = 0
        if self._last_batch_word_end is not None \
                and self._last_input_batch_t is not None:
            self._turn_asr_span = max(
                0, self._last_input_batch_t - self._last_batch_word_end)

        task = self.gen
        if task is None or task.session.id != session.id:
            # sync mode: generation starts only now, at the decision
            task = GenTask(session=session,
                           turn_index=self.bot_turns_completed,
                           lm_state=self.lm.new_state(),
                           started_at_ms=now, confirmed=False)
            self.gen = task

        state, confirmed_session, _flushed = confirm_speculative(
            self.turn_state, task.session, now)
        self.turn_state = state
        self.speculative = None
        task.session = confirmed_session
        task.confirmed = True
        self._open_bot_turn(task, initiated=False)

        # pace emission: one token per step interval, starting at the later
        # of the confirmation instant and the task's first generated token
        interval = task.lm_state.step_interval_ms
        first_delay = getattr(self.lm, "first_token_delay_ms", 0)
        t0 = max(now, task.started_at_ms + first_delay + interval)
        self._reschedule_emission(task, t0)
        self._emit_state_update()

    def _open_bot_turn(self, task: GenTask, initiated: bool):
        record = BotTurnRecord(turn_index=task.turn_index,
                               gen_id=task.session.id, initiated=initiated,
                               confirm_t=self.clock.now_ms)
        self.bot_turns.append(record)
        self.chunker = DynamicChunker(
            t_unit_ms=self.config.unit_t_ms,
            epsilon_ms=self.config.epsilon_ms,
            profile=self.decoder.profile,
            priming_units=self.priming_units,
            ref_prefix=f"a{task.turn_index}.")
        self._turn_first_unit_t = None
        self._turn_first_audio_ready = None

    def _handle_start_speculative(self, session: SpeculativeSession):
        if self.gen is not None and not self.gen.confirmed:
            # stale speculation: drop it silently (restart semantics)
            self.gen.cancelled = True
            if self.gen.handle is not None:
                self.gen.handle.cancel()
            self.gen = None
        if self.mode == ASYNC:
            self._launch_task(session, confirmed=False)
        # sync mode: the decision point creates the task

    def _launch_task(self, session: SpeculativeSession, confirmed: bool):
        task = GenTask(session=session, turn_index=self.bot_turns_completed,
                       lm_state=self.lm.new_state(),
                       started_at_ms=self.clock.now_ms, confirmed=confirmed)
        self.gen = task
        interval = task.lm_state.step_interval_ms
        first_delay = getattr(self.lm, "first_token_delay_ms", 0)
        first = self.clock.now_ms + first_delay + interval
        task.handle = self.queue.at(first, lambda: self._gen_step(task))
        return task

    def _reschedule_emission(self, task: GenTask, t0: int):
        if task.handle is not None:
            task.handle.cancel()
        task.handle = self.queue.at(max(t0, self.clock.now_ms),
                                    lambda: self._gen_step(task))

    def _gen_step(self, task: GenTask):
        task.handle = None
        if task.cancelled:
            return
        now = self.clock.now_ms
        n_ready = len(task.session.generated)
        if task.confirmed and task.emitted < n_ready:
            token = task.session.generated[task.emitted]
        else:
            try:
                token, _p, task.lm_state = self.lm.step(
                    task.lm_state, task.turn_index, self.turn_state.context)
            except BackendError as exc:
                self._generation_fault(task, exc)
                return
            if task.first_token_at is None:
                task.first_token_at = now
            if not task.confirmed:
                task.session = extend_speculative(task.session, token)
                self.speculative = task.session
        if task.confirmed:
            done = self._emit_bot_token(task, token)
            if done:
                self._finish_bot_turn(task)
                return
            if task.cancelled:
                return  # a watcher-injected barge-in cancelled us mid-emit
        elif isinstance(token, EndOfTurn):
            return  # speculation complete; awaits confirmation
        task.handle = self.queue.after(task.lm_state.step_interval_ms,
                                       lambda: self._gen_step(task))

    def _emit_bot_token(self, task: GenTask, token: Token) -> bool:
        """Emit one confirmed token; returns True when the turn finished."""
        now = self.clock.now_ms
        if task.emitted < len(task.session.generated):
            # token already in the context via confirmation
            done = isinstance(token, EndOfTurn)
            if done:
                self.turn_state = replace(
                    self.turn_state, phase=Phase.IDLE, silence_since_ms=now,
                    active_generation_id=None)
        else:
            self.turn_state, done = append_bot_token(self.turn_state, token, now)
        task.emitted += 1
        record = self.bot_turns[-1]
        record.tokens.append(token)
        if record.first_token_t is None and not isinstance(token, EndOfTurn):
            record.first_token_t = now
        if task.first_token_at is None:
            task.first_token_at = now
        self._emit("bot_token", {"token": token_to_json(token),
                                 "gen": task.session.id,
                                 "turn": task.turn_index})
        if not isinstance(token, EndOfTurn):
            self.bot_tokens_emitted += 1
            self._fire_token_watchers()
        if isinstance(token, Unit) and self.chunker is not None:
            self._feed_chunker(token)
        return done

    # ------------------------------------------------------ chunk stream

    def _feed_chunker(self, unit: Unit):
        now = self.clock.now_ms
        if self._turn_first_unit_t is None:
            self._turn_first_unit_t = now
        entry = self.chunker.on_unit(now, unit)
        if entry is not None:
            self._emit_chunk(entry)
        self._arm_cut_timer()

    def _arm_cut_timer(self):
        if self._cut_handle is not None:
            self._cut_handle.cancel()
            self._cut_handle = None
        nt = self.chunker.next_cut_time() if self.chunker else None
        if nt is not None:
            self._cut_handle = self.queue.at(max(nt, self.clock.now_ms),
                                             self._cut_fired, late=True)

    def _cut_fired(self):
        self._cut_handle = None
        if self.chunker is None:
            return
        entry = self.chunker.on_timer(self.clock.now_ms)
        if entry is not None:
            self._emit_chunk(entry)
        self._arm_cut_timer()

    def _emit_chunk(self, entry):
        task = self.gen
        event = self.chunker.audio_events[-1]
        ref = self.decoder.synthesize(entry.units, entry.index,
                                      task.turn_index if task else 0)
        if self._turn_first_audio_ready is None:
            self._turn_first_audio_ready = event.ready_ms
        gen_id = task.session.id if task else -1
        turn = task.turn_index if task else -1

        def emit():
            self._emit("bot_audio_ref", {
                "ref": ref, "dur_ms": event.dur_ms,
                "chunk_index": entry.index, "turn": turn, "gen": gen_id,
                "playback_start_ms": event.playback_start_ms})
        handle = self.queue.at(max(event.ready_ms, self.clock.now_ms), emit)
        self._turn_handles.append(handle)

    # -------------------------------------------------- turn termination

    def _finish_bot_turn(self, task: GenTask):
        now = self.clock.now_ms
        record = self.bot_turns[-1]
        record.completed = True
        if self.chunker is not None:
            entry = self.chunker.flush(now)
            if entry is not None:
                self._emit_chunk(entry)
            self._emit_plan(task)
        self._emit("bot_text", {
            "text": token_text(record.tokens),
            "gen": task.session.id, "turn": task.turn_index})
        self._report_latency(task)
        self._close_generation(task)
        self._emit_state_update()
        self._arm_silence_timer()

    def _emit_plan(self, task: GenTask):
        plan = self.chunker.plan().to_json()
        plan["turn"] = task.turn_index
        self.chunk_plans.append((task.turn_index, plan))
        self._emit("chunk_plan", plan)

    def _report_latency(self, task: GenTask):
        interval = task.lm_state.step_interval_ms
        llm_first = (task.first_token_at - task.started_at_ms
                     if task.first_token_at is not None
                     else self.lm.first_token_delay_ms + interval)
        decoder_first = 0
        if self._turn_first_audio_ready is not None \
                and self._turn_first_unit_t is not None:
            decoder_first = max(
                0, self._turn_first_audio_ready - self._turn_first_unit_t)
        ledger = ledger_from_spans(self._turn_asr_span, llm_first,
                                   decoder_first, self._turn_wait)
        self.ledgers.append((task.turn_index, ledger))
        self._emit("latency_report", {
            "turn": task.turn_index,
            "spans": dict(ledger.spans),
            "bound_sync": latency_bound(ledger, SYNCHRONOUS),
            "bound_async": latency_bound(ledger, ASYNCHRONOUS),
        })

    def _close_generation(self, task: GenTask):
        if task.handle is not None:
            task.handle.cancel()
            task.handle = None
        if self._cut_handle is not None:
            self._cut_handle.cancel()
            self._cut_handle = None
        self.chunker = None
        self._turn_handles.clear()
        if self.gen is task:
            self.gen = None
        self.bot_turns_completed += 1

    def _cancel_generation(self, session_id: int):
        task = self.gen
        if task is None or task.session.id != session_id:
            return
        task.cancelled = True
        if task.handle is not None:
            task.handle.cancel()
            task.handle = None
        for handle in self._turn_handles:
            handle.cancel()  # undelivered audio of the cancelled turn
        self._turn_handles.clear()
        self._emit("interrupt_ack", {"cancelled_gen": session_id})
        if task.confirmed:
            record = self.bot_turns[-1]
            record.cancelled = True
            if self.chunker is not None:
                self._emit_plan(task)
        self.chunker = None
        if self._cut_handle is not None:
            self._cut_handle.cancel()
            self._cut_handle = None
        self.gen = None
        if task.confirmed:
            self.bot_turns_completed += 1

    def _generation_fault(self, task: GenTask, exc: Exception):
        self._emit_error("lm_generation", str(exc))
        self.asr_state = asr_reset(self.asr_state, "hallucination")
        task.cancelled = True
        if task.confirmed:
            record = self.bot_turns[-1]
            record.cancelled = True
            self.turn_state = replace(
                self.turn_state, phase=Phase.IDLE,
                silence_since_ms=self.clock.now_ms, active_generation_id=None)
            self._close_generation(task)
        else:
            self.gen = None
            self.speculative = None
        self._emit_state_update()
        self._arm_silence_timer()

    # ----------------------------------------------------------- silence

    def _arm_silence_timer(self):
        self._cancel_silence_timer()
        if self.turn_state.phase is not Phase.IDLE:
            return
        has_turn = getattr(self.lm, "has_turn",
                           lambda i: True)(self.bot_turns_completed)
        if not has_turn:
            return
        self._silence_handle = self.queue.after(
            self.config.silence_initiate_ms, self._silence_fired, late=True)

    def _cancel_silence_timer(self):
        if self._silence_handle is not None:
            self._silence_handle.cancel()
            self._silence_handle = None

    def _silence_fired(self):
        self._silence_handle = None
        state, actions = on_silence_tick(self.turn_state, self.clock.now_ms,
                                         self.config.silence_initiate_ms)
        self.turn_state = state
        for action in actions:
            self._trace(action)
            if isinstance(action, BotInitiate):
                self._emit("bot_initiate", {"gen": action.session_id,
                                            "turn": self.bot_turns_completed})
                session = SpeculativeSession(
                    id=action.session_id,
                    prompt_snapshot_len=len(self.turn_state.context),
                    started_at_ms=self.clock.now_ms, confirmed=True)
                self._last_input_batch_t = self.clock.now_ms
                self._turn_wait = 0
                self._turn_asr_span = 0
                task = self._launch_task(session, confirmed=True)
                self._open_bot_turn(task, initiated=True)
                self._emit_state_update()

    # ------------------------------------------------------------- reset

    def _reset(self, cause: str):
        self.asr_state = asr_reset(self.asr_state, cause)
        self.audio_inbox.clear()
        if self._poll_handle is not None:
            self._poll_handle.cancel()
            self._poll_handle = None
        self._emit_state_update()

    # ------------------------------------------------------ token anchors

    def add_token_watcher(self, threshold: int, fn: Callable[[], None]):
        """Invoke ``fn`` once the session has emitted ``threshold`` bot tokens."""
        if self.bot_tokens_emitted >= threshold:
            fn()
        else:
            self._token_watchers.append((threshold, fn))

    def _fire_token_watchers(self):
        if not self._token_watchers:
            return
        ready = [w for w in self._token_watchers
                 if self.bot_tokens_emitted >= w[0]]
        self._token_watchers = [w for w in self._token_watchers
                                if self.bot_tokens_emitted < w[0]]
        for _, fn in ready:
            fn()
