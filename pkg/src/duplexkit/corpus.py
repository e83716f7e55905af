"""Offline corpus preparation.

Dialogue records hold per-turn transcripts and unit timelines plus
optional interruption annotations. The tools here form interleaved token
sequences (sharing the online weaving implementation), splice annotated
interruptions into the single-stream encoding, apply the rule-based
quality filter, and render multi-turn training samples with speaker
headers and modality-controlled content.

Corpus files are line-delimited JSON: one record per line, a "kind"
field of "dialogue" or "sample".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .core.tokens import (
    EOT,
    SPEAKER_MACHINE,
    SPEAKER_SYSTEM,
    Header,
    Modality,
    Text,
    TimedWord,
    Token,
    Unit,
    token_to_json,
)
from .errors import DuplexError
from .frontend.interleave import check_monotone_units, check_monotone_words, weave
from .frontend.units import TimedUnit
from .turns.interruption import encode_interruption
from .turns.prompts import format_system_prompt

MAX_SAMPLE_TOKENS = 16384

# allowed (input, output) modality pairs per task family
PRETRAIN_PAIRS: Set[Tuple[Modality, Modality]] = {
    (Modality.UNIT, Modality.TEXT),    # recognition
    (Modality.UNIT, Modality.HYBRID),
    (Modality.TEXT, Modality.UNIT),    # synthesis
    (Modality.TEXT, Modality.HYBRID),
    (Modality.TEXT, Modality.TEXT),    # text-only
}
DIALOGUE_PAIRS: Set[Tuple[Modality, Modality]] = {
    (Modality.UNIT, Modality.TEXT),
    (Modality.UNIT, Modality.HYBRID),
    (Modality.HYBRID, Modality.TEXT),
    (Modality.HYBRID, Modality.HYBRID),
    (Modality.TEXT, Modality.HYBRID),  # every pair except text-to-text
}
FAMILIES = {"pretrain": PRETRAIN_PAIRS, "dialogue": DIALOGUE_PAIRS}


@dataclass(frozen=True)
class DialogueTurn:
    speaker: str
    words: Tuple[TimedWord, ...] = ()
    units: Tuple[TimedUnit, ...] = ()

    def transcript(self) -> str:
        return "".join(w.surface for w in self.words)


@dataclass(frozen=True)
class InterruptionAnnotation:
    """Where and with what a turn gets interrupted."""

    turn_index: int
    split_word_index: int
    interrupter: str
    words: Tuple[TimedWord, ...] = ()
    units: Tuple[TimedUnit, ...] = ()


@dataclass(frozen=True)
class DialogueRecord:
    turns: Tuple[DialogueTurn, ...]
    interruptions: Tuple[InterruptionAnnotation, ...] = ()
    meta: str = ""


def validate_dialogue(dialogue: DialogueRecord) -> None:
    """Structural invariants: timelines monotone, speakers alternate."""
    annotated = {a.turn_index for a in dialogue.interruptions}
    for i, turn in enumerate(dialogue.turns):
        check_monotone_words(turn.words)
        check_monotone_units(turn.units)
        if i > 0 and turn.speaker == dialogue.turns[i - 1].speaker \
                and (i - 1) not in annotated and i not in annotated:
            raise DuplexError(
                f"adjacent turns {i - 1} and {i} share speaker "
                f"{turn.speaker!r} without an interruption annotation")


# ----------------------------------------------------------- interleaving


def form_interleaved(transcript: Sequence[TimedWord],
                     units: Sequence[TimedUnit]) -> List[Token]:
    """Offline interleaving over a complete utterance.

    Same weaving core as the online path but with an unbounded recovery
    window, plus a trailing flush: offline has the whole timeline, so no
    unit is dropped. An empty transcript yields the pure unit sequence.
    """
    check_monotone_words(transcript)
    check_monotone_units(units)
    tokens, cursor = weave(0, transcript, units, gap_cap_ms=None)
    tokens.extend(tu.unit for tu in units if tu.start_ms >= cursor)
    return tokens


# ----------------------------------------------------------- interruption


def insert_interruption_record(dialogue: DialogueRecord,
                               annotation: InterruptionAnnotation
                               ) -> DialogueRecord:
    """Attach an interruption annotation after validating it.

    The speaker-consistency rule is structural: nobody interrupts
    themselves. The actual split happens at render time through the
    single-stream interruption encoding.
    """
    if not 0 <= annotation.turn_index < len(dialogue.turns):
        raise DuplexError(f"turn index {annotation.turn_index} outside "
                          f"[0, {len(dialogue.turns)})")
    turn = dialogue.turns[annotation.turn_index]
    if not 0 <= annotation.split_word_index <= len(turn.words):
        raise DuplexError(
            f"split word index {annotation.split_word_index} outside "
            f"[0, {len(turn.words)}]")
    if annotation.interrupter == turn.speaker:
        raise DuplexError(
            f"speaker {turn.speaker!r} cannot interrupt themselves "
            f"(speaker-consistency rule)")
    return replace(dialogue,
                   interruptions=dialogue.interruptions + (annotation,))


# ---------------------------------------------------------------- filter


@dataclass(frozen=True)
class FilterRules:
    hallucination_patterns: Tuple[str, ...] = ()
    han_fraction_min: float = 0.2


@dataclass(frozen=True)
class FilterVerdict:
    keep: bool
    reason: Optional[str] = None  # hallucination | language | missing_turn


def _is_han(ch: str) -> bool:
    cp = ord(ch)
    return (0x4E00 <= cp <= 0x9FFF or 0x3400 <= cp <= 0x4DBF
            or 0xF900 <= cp <= 0xFAFF or 0x20000 <= cp <= 0x2A6DF)


def filter_sample(dialogue: DialogueRecord,
                  rules: FilterRules) -> FilterVerdict:
    """Apply the quality rules in fixed precedence; first failure wins.

    1. hallucination: a turn transcript contains a known pattern;
    2. language: the Han fraction over all letters falls below the
       threshold (catches all-English data; no letters at all passes);
    3. missing turn: an empty transcript, or a same-speaker adjacency
       with no interruption annotation (a segmentation gap).
    """
    patterns = ["".join(p.split()) for p in rules.hallucination_patterns]
    for turn in dialogue.turns:
        text = "".join(turn.transcript().split())
        if any(p and p in text for p in patterns):
            return FilterVerdict(False, "hallucination")

    letters = [ch for turn in dialogue.turns for ch in turn.transcript()
               if ch.isalpha()]
    if letters:
        han = sum(1 for ch in letters if _is_han(ch))
        if han / len(letters) < rules.han_fraction_min:
            return FilterVerdict(False, "language")

    annotated = {a.turn_index for a in dialogue.interruptions}
    for i, turn in enumerate(dialogue.turns):
        if not turn.transcript().strip():
            return FilterVerdict(False, "missing_turn")
        if i > 0 and turn.speaker == dialogue.turns[i - 1].speaker \
                and (i - 1) not in annotated and i not in annotated:
            return FilterVerdict(False, "missing_turn")
    return FilterVerdict(True)


# -------------------------------------------------------------- rendering


@dataclass(frozen=True)
class TrainingSample:
    system_prompt: str
    input_modality: Modality
    output_modality: Modality
    token_sequence: Tuple[Token, ...]
    max_length: int = MAX_SAMPLE_TOKENS

    def __post_init__(self):
        if len(self.token_sequence) > self.max_length:
            raise ValueError("token sequence exceeds max_length")


def render_turn_tokens(turn: DialogueTurn, modality: Modality) -> List[Token]:
    """A turn's content in one modality (no header, no end marker)."""
    if modality is Modality.TEXT:
        return [Text(w.surface) for w in turn.words]
    if modality is Modality.UNIT:
        return [tu.unit for tu in turn.units]
    return form_interleaved(turn.words, turn.units)


def _token_split_index(turn: DialogueTurn, modality: Modality,
                       split_word_index: int) -> int:
    """Token position of a word-level split in the rendered turn."""
    if split_word_index >= len(turn.words):
        return len(render_turn_tokens(turn, modality))
    if modality is Modality.TEXT:
        return split_word_index
    split_ms = turn.words[split_word_index].start_ms
    if modality is Modality.UNIT:
        return sum(1 for tu in turn.units if tu.start_ms < split_ms)
    # hybrid: position of the split word's text token in the woven stream
    tokens = form_interleaved(turn.words, turn.units)
    seen = 0
    for i, tok in enumerate(tokens):
        if isinstance(tok, Text):
            if seen == split_word_index:
                return i
            seen += 1
    return len(tokens)


def render_training_sample(dialogue: DialogueRecord,
                           input_mod: Modality, output_mod: Modality,
                           role: str, family: str = "dialogue",
                           machine_speaker: str = SPEAKER_MACHINE
                           ) -> TrainingSample:
    """One training sample: system prompt, headers, modality-typed turns.

    User turns render in the input modality and machine turns in the
    output modality; annotated interruptions are spliced in through the
    single-stream encoding. The sequence is truncated to the maximum
    sample length.
    """
    try:
        allowed = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown task family {family!r}; "
                         f"expected one of {sorted(FAMILIES)}") from None
    if (input_mod, output_mod) not in allowed:
        rows = sorted(f"{i.value}->{o.value}" for i, o in allowed)
        raise ValueError(
            f"modality pair {input_mod.value}->{output_mod.value} is not "
            f"a {family} combination; allowed: {', '.join(rows)}")
    validate_dialogue(dialogue)

    def turn_modality(speaker: str) -> Modality:
        return output_mod if speaker == machine_speaker else input_mod

    annotations: Dict[int, InterruptionAnnotation] = {
        a.turn_index: a for a in dialogue.interruptions}

    prompt = format_system_prompt(input_mod, output_mod, role)
    tokens: List[Token] = [Header(SPEAKER_SYSTEM), Text(prompt)]
    for i, turn in enumerate(dialogue.turns):
        tokens.append(Header(turn.speaker))
        content = render_turn_tokens(turn, turn_modality(turn.speaker))
        note = annotations.get(i)
        if note is None:
            tokens.extend(content)
            tokens.append(EOT)
            continue
        split_at = _token_split_index(turn, turn_modality(turn.speaker),
                                      note.split_word_index)
        interrupting = render_turn_tokens(
            DialogueTurn(note.interrupter, note.words, note.units),
            turn_modality(note.interrupter)) + [EOT]
        tokens.extend(encode_interruption(
            content, split_at, note.interrupter, interrupting,
            original_speaker=turn.speaker))
        tokens.append(EOT)
    return TrainingSample(
        system_prompt=prompt,
        input_modality=input_mod,
        output_modality=output_mod,
        token_sequence=tuple(tokens[:MAX_SAMPLE_TOKENS]))


def split_by_headers(tokens: Sequence[Token]
                     ) -> List[Tuple[str, List[Token]]]:
    """Segments between headers: [(speaker, content tokens)]."""
    segments: List[Tuple[str, List[Token]]] = []
    current: Optional[List[Token]] = None
    for tok in tokens:
        if isinstance(tok, Header):
            current = []
            segments.append((tok.speaker, current))
        elif current is not None:
            current.append(tok)
    return segments


# ------------------------------------------------------------ file format


def _word_json(w: TimedWord) -> list:
    return [w.surface, w.start_ms, w.end_ms]


def _unit_json(tu: TimedUnit) -> list:
    return [tu.unit.index, tu.start_ms]


def dialogue_to_json(dialogue: DialogueRecord) -> dict:
    return {
        "kind": "dialogue",
        "meta": dialogue.meta,
        "turns": [{
            "speaker": t.speaker,
            "words": [_word_json(w) for w in t.words],
            "units": [_unit_json(u) for u in t.units],
        } for t in dialogue.turns],
        "interruptions": [{
            "turn": a.turn_index,
            "split": a.split_word_index,
            "interrupter": a.interrupter,
            "words": [_word_json(w) for w in a.words],
            "units": [_unit_json(u) for u in a.units],
        } for a in dialogue.interruptions],
    }


def _words_from_json(raw) -> Tuple[TimedWord, ...]:
    return tuple(TimedWord(str(s), int(a), int(b)) for s, a, b in raw)


def _units_from_json(raw) -> Tuple[TimedUnit, ...]:
    return tuple(TimedUnit(Unit(int(u)), int(t)) for u, t in raw)


def dialogue_from_json(obj: dict) -> DialogueRecord:
    if obj.get("kind") != "dialogue":
        raise DuplexError(f"not a dialogue record: kind={obj.get('kind')!r}")
    return DialogueRecord(
        turns=tuple(DialogueTurn(
            speaker=str(t["speaker"]),
            words=_words_from_json(t.get("words", [])),
            units=_units_from_json(t.get("units", [])),
        ) for t in obj.get("turns", [])),
        interruptions=tuple(InterruptionAnnotation(
            turn_index=int(a["turn"]),
            split_word_index=int(a["split"]),
            interrupter=str(a["interrupter"]),
            words=_words_from_json(a.get("words", [])),
            units=_units_from_json(a.get("units", [])),
        ) for a in obj.get("interruptions", [])),
        meta=str(obj.get("meta", "")),
    )


def sample_to_json(sample: TrainingSample) -> dict:
    return {
        "kind": "sample",
        "system_prompt": sample.system_prompt,
        "input_modality": sample.input_modality.value,
        "output_modality": sample.output_modality.value,
        "tokens": [token_to_json(t) for t in sample.token_sequence],
    }


def read_records(text: str) -> List[dict]:
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DuplexError(f"corpus line {lineno}: {exc.msg}") from exc
    return records


def write_records(records: Sequence[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n"
                   for r in records)
