"""Scenario documents: scripted sessions for deterministic replay.

A scenario is UTF-8, line-delimited JSON; every record carries an integer
``t`` (milliseconds) and a ``kind``. Record times must be non-decreasing.

Kinds:
  scenario        header: name, config overrides, lm parameters,
                  hallucination patterns, session modalities
                  {"name", "config": {...}, "patterns": [...],
                   "user_modality": "text"|"unit"|"hybrid",
                   "machine_modality": ...,
                   "lm": {"tokens_per_second", "first_token_delay_ms",
                   "default_eot", "fail_at": [turn, step]}}
  user_audio      {"chunk": id, "dur_ms"?} symbolic audio arriving at t
  user_text       {"text", "await_bot_tokens"?} typed input; the await form
                  delivers once that many bot tokens were emitted (and t
                  has passed), anchoring barge-ins to bot progress
  asr_script      {"words": [[surface, start_ms, end_ms], ...]} hypothesis
                  returned once buffered audio reaches t; {"fail": true}
                  makes that poll raise
  encoder_map     {"chunk": id, "units": [int, ...]} unit values for a chunk
  lm_turn         {"turn": k, "tokens": [token, ...]} or
                  {"turn": k, "text": "w1 w2", "units_per_word": n} reply
                  script for machine turn k; {"fail_at_step": s} injects a
                  generation fault
  lm_eot          {"p", "utterance"? , "min_units"?, "turn"?, "fail"?}
                  end-of-turn probability rule
  decoder_profile {"processing_ms_per_chunk": int}
  expect          {"check": name, ...params} post-run assertion record

Token objects use the shared form {"type": "text"|"unit"|"header"|"eot", ...}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .backends import (
    EotRule,
    ScriptedAsr,
    ScriptedDecoder,
    ScriptedEncoder,
    ScriptedLm,
    hybrid_reply,
)
from .core.config import SessionConfig, config_from_mapping
from .core.tokens import Modality, TimedWord, Token, token_from_json
from .errors import ConfigError, ScenarioError
from .scheduler import DecoderBackendProfile

KINDS = ("scenario", "user_audio", "user_text", "asr_script", "encoder_map",
         "lm_turn", "lm_eot", "decoder_profile", "expect")

CHECKS = ("kind_order", "no_stale_bot_tokens", "min_count", "max_count",
          "transcript_contains", "terminal_phase", "confirmed_contains",
          "confirmed_excludes", "context_units")


@dataclass(frozen=True)
class UserAudioEvent:
    t_ms: int
    chunk_id: str
    dur_ms: Optional[int] = None  # None: the configured chunk size


@dataclass(frozen=True)
class UserTextEvent:
    t_ms: int
    text: str
    await_bot_tokens: Optional[int] = None


@dataclass(frozen=True)
class Expectation:
    check: str
    params: dict


@dataclass(frozen=True)
class Scenario:
    """A fully validated scripted session."""

    name: str
    config: SessionConfig
    events: Tuple[object, ...] = ()
    asr_script: Tuple[Tuple[int, Tuple[TimedWord, ...]], ...] = ()
    asr_fail_at: Tuple[int, ...] = ()
    encoder_map: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    lm_turns: Tuple[Tuple[Token, ...], ...] = ()
    eot_rules: Tuple[EotRule, ...] = ()
    lm_params: Dict[str, object] = field(default_factory=dict)
    decoder_profile: DecoderBackendProfile = DecoderBackendProfile()
    expectations: Tuple[Expectation, ...] = ()
    patterns: Tuple[str, ...] = ()
    user_modality: Modality = Modality.HYBRID
    machine_modality: Modality = Modality.HYBRID

    def build_backends(self):
        """Instantiate the four scripted backends for one session run."""
        asr = ScriptedAsr(self.asr_script, fail_at=self.asr_fail_at)
        encoder = ScriptedEncoder(
            {k: list(v) for k, v in self.encoder_map.items()},
            unit_vocab_size=self.config.unit_vocab_size,
            unit_t_ms=self.config.unit_t_ms)
        lm = ScriptedLm(
            turns=self.lm_turns,
            eot_rules=self.eot_rules,
            default_eot=float(self.lm_params.get("default_eot", 0.0)),
            tokens_per_second=int(self.lm_params.get("tokens_per_second", 100)),
            first_token_delay_ms=int(self.lm_params.get("first_token_delay_ms", 0)),
            fail_at=(tuple(self.lm_params["fail_at"])
                     if self.lm_params.get("fail_at") is not None else None),
        )
        decoder = ScriptedDecoder(profile=self.decoder_profile)
        return asr, encoder, lm, decoder


def _err(msg: str, line: Optional[int]) -> ScenarioError:
    return ScenarioError(msg, line=line)


def _parse_words(raw, line) -> Tuple[TimedWord, ...]:
    words = []
    for item in raw:
        try:
            surface, start, end = item
            words.append(TimedWord(str(surface), int(start), int(end)))
        except (TypeError, ValueError) as exc:
            raise _err(f"bad word entry {item!r}: {exc}", line)
    return tuple(words)


def scenario_from_records(records: Sequence[dict],
                          lines: Optional[Sequence[int]] = None) -> Scenario:
    """Validate parsed records into a Scenario.

    ``lines`` maps each record to its source line for error reporting.
    """
    if lines is None:
        lines = [None] * len(records)

    name = "unnamed"
    patterns: List[str] = []
    user_modality = Modality.HYBRID
    machine_modality = Modality.HYBRID
    config_overrides: dict = {}
    lm_params: dict = {}
    events: List[object] = []
    asr_script: List[Tuple[int, Tuple[TimedWord, ...]]] = []
    asr_fail_at: List[int] = []
    encoder_map: Dict[str, Tuple[int, ...]] = {}
    lm_turns: Dict[int, Tuple[Token, ...]] = {}
    eot_rules: List[EotRule] = []
    profile = DecoderBackendProfile()
    expectations: List[Expectation] = []

    last_t = None
    for rec, line in zip(records, lines):
        if not isinstance(rec, dict):
            raise _err(f"record must be an object, got {type(rec).__name__}", line)
        kind = rec.get("kind")
        if kind not in KINDS:
            raise _err(f"unknown kind {kind!r}", line)
        if "t" not in rec:
            raise _err("record missing 't'", line)
        try:
            t = int(rec["t"])
        except (TypeError, ValueError):
            raise _err(f"bad 't' value {rec['t']!r}", line)
        if t < 0:
            raise _err(f"negative time {t}", line)
        if last_t is not None and t < last_t:
            raise _err(f"record times must be non-decreasing "
                       f"({t} after {last_t})", line)
        last_t = t

        if kind == "scenario":
            name = str(rec.get("name", name))
            config_overrides.update(rec.get("config", {}))
            lm_params.update(rec.get("lm", {}))
            patterns.extend(str(x) for x in rec.get("patterns", []))
            try:
                if "user_modality" in rec:
                    user_modality = Modality.parse(str(rec["user_modality"]))
                if "machine_modality" in rec:
                    machine_modality = Modality.parse(
                        str(rec["machine_modality"]))
            except ValueError as exc:
                raise _err(str(exc), line)
        elif kind == "user_audio":
            if "chunk" not in rec:
                raise _err("user_audio needs a 'chunk' id", line)
            dur = rec.get("dur_ms")
            events.append(UserAudioEvent(t, str(rec["chunk"]),
                                         int(dur) if dur is not None else None))
        elif kind == "user_text":
            if "text" not in rec:
                raise _err("user_text needs 'text'", line)
            awaits = rec.get("await_bot_tokens")
            if awaits is not None and int(awaits) < 1:
                raise _err("await_bot_tokens must be >= 1", line)
            events.append(UserTextEvent(t, str(rec["text"]),
                                        int(awaits) if awaits is not None else None))
        elif kind == "asr_script":
            if rec.get("fail"):
                asr_fail_at.append(t)
            else:
                asr_script.append((t, _parse_words(rec.get("words", []), line)))
        elif kind == "encoder_map":
            if "chunk" not in rec or "units" not in rec:
                raise _err("encoder_map needs 'chunk' and 'units'", line)
            units = tuple(int(u) for u in rec["units"])
            if any(u < 0 for u in units):
                raise _err("unit values must be >= 0", line)
            encoder_map[str(rec["chunk"])] = units
        elif kind == "lm_turn":
            turn = rec.get("turn")
            if turn is None or int(turn) < 0:
                raise _err("lm_turn needs a non-negative 'turn' index", line)
            turn = int(turn)
            if "tokens" in rec:
                try:
                    tokens = tuple(token_from_json(o) for o in rec["tokens"])
                except ValueError as exc:
                    raise _err(str(exc), line)
            elif "text" in rec:
                tokens = tuple(hybrid_reply(
                    str(rec["text"]).split(),
                    int(rec.get("units_per_word", 0)),
                    turn, int(config_overrides.get("unit_vocab_size", 1024))))
            else:
                raise _err("lm_turn needs 'tokens' or 'text'", line)
            lm_turns[turn] = tokens
            if "fail_at_step" in rec:
                lm_params["fail_at"] = (turn, int(rec["fail_at_step"]))
        elif kind == "lm_eot":
            try:
                rule = EotRule(
                    p=float(rec.get("p", 0.0)),
                    utterance=rec.get("utterance"),
                    min_units=(int(rec["min_units"])
                               if "min_units" in rec else None),
                    turn=int(rec["turn"]) if "turn" in rec else None,
                    fail=bool(rec.get("fail", False)),
                )
            except ValueError as exc:
                raise _err(str(exc), line)
            eot_rules.append(rule)
        elif kind == "decoder_profile":
            try:
                profile = DecoderBackendProfile(
                    int(rec.get("processing_ms_per_chunk", 0)))
            except ValueError as exc:
                raise _err(str(exc), line)
        elif kind == "expect":
            check = rec.get("check")
            if check not in CHECKS:
                raise _err(f"unknown check {check!r}; expected one of {CHECKS}",
                           line)
            params = {k: v for k, v in rec.items()
                      if k not in ("kind", "t", "check")}
            expectations.append(Expectation(check, params))

    try:
        config = config_from_mapping(config_overrides)
    except ConfigError as exc:
        raise ScenarioError(f"bad config overrides: {exc}")

    for chunk_id, units in encoder_map.items():
        for u in units:
            if u >= config.unit_vocab_size:
                raise ScenarioError(
                    f"encoder_map[{chunk_id!r}] unit {u} outside vocabulary "
                    f"[0, {config.unit_vocab_size})")

    n_turns = (max(lm_turns) + 1) if lm_turns else 0
    turns = tuple(lm_turns.get(i, ()) for i in range(n_turns))
    return Scenario(
        name=name,
        config=config,
        events=tuple(events),
        asr_script=tuple(asr_script),
        asr_fail_at=tuple(asr_fail_at),
        encoder_map=encoder_map,
        lm_turns=turns,
        eot_rules=tuple(eot_rules),
        lm_params=lm_params,
        decoder_profile=profile,
        expectations=tuple(expectations),
        patterns=tuple(patterns),
        user_modality=user_modality,
        machine_modality=machine_modality,
    )


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document."""
    records: List[dict] = []
    lines: List[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"malformed record: {exc.msg}", line=lineno)
        lines.append(lineno)
    if not records:
        raise ScenarioError("empty scenario document")
    return scenario_from_records(records, lines)


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())
