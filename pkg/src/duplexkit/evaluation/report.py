"""Evaluation reports.

Two report surfaces:
  - fixture reports: ingest externally produced model outputs (reference
    and hypothesis transcripts plus judge replies) and emit one row per
    model/modality group with aggregate character error rate and judge
    score, the shape used for model comparisons;
  - trace reports: per-session latency and turn statistics extracted from
    a recorded wire trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..errors import DuplexError
from ..service.wire import parse_trace
from .distance import cer, levenshtein
from .judge import parse_judge_reply


@dataclass(frozen=True)
class EvalFixture:
    """One dialogue's externally produced outputs."""

    model: str
    modality: str
    reference: str
    hypothesis: str
    judge_reply: str
    mos: Optional[float] = None


def load_fixtures(text: str) -> List[EvalFixture]:
    """Parse line-delimited fixture records."""
    fixtures = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
            fixtures.append(EvalFixture(
                model=str(obj["model"]),
                modality=str(obj["modality"]),
                reference=str(obj["reference"]),
                hypothesis=str(obj["hypothesis"]),
                judge_reply=str(obj["judge_reply"]),
                mos=float(obj["mos"]) if obj.get("mos") is not None else None,
            ))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DuplexError(f"fixture line {lineno}: {exc}") from exc
    return fixtures


@dataclass(frozen=True)
class ReportRow:
    model: str
    modality: str
    cer_percent: float
    mos: Optional[float]
    llm_score: float
    dialogues: int


def fixture_report(fixtures: Sequence[EvalFixture],
                   strip_whitespace: bool = True) -> List[ReportRow]:
    """Aggregate fixtures into (model, modality) rows.

    CER is corpus-level (total edit distance over total reference
    length); the judge score is the mean of recomputed overall scores.
    """
    groups: Dict[Tuple[str, str], List[EvalFixture]] = {}
    for fx in fixtures:
        groups.setdefault((fx.model, fx.modality), []).append(fx)

    rows: List[ReportRow] = []
    for (model, modality), items in sorted(groups.items()):
        total_dist = 0
        total_len = 0
        scores: List[int] = []
        mos_values: List[float] = []
        for fx in items:
            ref = "".join(fx.reference.split()) if strip_whitespace \
                else fx.reference
            hyp = "".join(fx.hypothesis.split()) if strip_whitespace \
                else fx.hypothesis
            if not ref:
                raise DuplexError(
                    f"empty reference for {model}/{modality}")
            total_dist += levenshtein(ref, hyp)
            total_len += len(ref)
            scores.append(parse_judge_reply(fx.judge_reply).overall)
            if fx.mos is not None:
                mos_values.append(fx.mos)
        rows.append(ReportRow(
            model=model, modality=modality,
            cer_percent=100.0 * total_dist / total_len,
            mos=(sum(mos_values) / len(mos_values)) if mos_values else None,
            llm_score=sum(scores) / len(scores),
            dialogues=len(items)))
    return rows


def render_fixture_report(rows: Sequence[ReportRow]) -> str:
    header = f"{'Model':<24} {'Modality':<10} {'CER (%)':>8} {'MOS':>6} {'LLM Score':>10}"
    lines = [header, "-" * len(header)]
    for row in rows:
        mos = f"{row.mos:.2f}" if row.mos is not None else "-"
        lines.append(f"{row.model:<24} {row.modality:<10} "
                     f"{row.cer_percent:>8.2f} {mos:>6} {row.llm_score:>10.1f}")
    return "\n".join(lines)


# ------------------------------------------------------------ trace stats


@dataclass(frozen=True)
class TraceStats:
    messages_in: int
    messages_out: int
    bot_turns: int
    completed_turns: int
    interrupts: int
    resets: int
    first_token_latencies_ms: Tuple[int, ...]
    turn_waits_ms: Tuple[int, ...]
    bounds_sync: Tuple[int, ...]
    bounds_async: Tuple[int, ...]


def trace_stats(trace_text: str) -> TraceStats:
    entries = parse_trace(trace_text)
    inbound = [m for d, m in entries if d == ">"]
    outbound = [m for d, m in entries if d == "<"]

    turn_first: Dict[int, int] = {}
    completed = set()
    turns = set()
    for msg in outbound:
        if msg.kind == "bot_token":
            turn = msg.payload.get("turn")
            turns.add(turn)
            token = msg.payload.get("token", {})
            if token.get("type") != "eot" and turn not in turn_first:
                turn_first[turn] = msg.t_ms
        elif msg.kind == "bot_text":
            completed.add(msg.payload.get("turn"))

    eots = [m for m in outbound if m.kind == "eot_detected"]
    first_latencies = []
    for turn, t_first in sorted(turn_first.items()):
        trigger = max((m.t_ms for m in eots if m.t_ms <= t_first), default=None)
        anchor = trigger if trigger is not None else t_first
        first_latencies.append(t_first - anchor)

    reports = [m for m in outbound if m.kind == "latency_report"]
    return TraceStats(
        messages_in=len(inbound),
        messages_out=len(outbound),
        bot_turns=len(turns),
        completed_turns=len(completed),
        interrupts=sum(1 for m in outbound if m.kind == "interrupt_ack"),
        resets=sum(1 for m in inbound if m.kind == "reset_command"),
        first_token_latencies_ms=tuple(first_latencies),
        turn_waits_ms=tuple(m.payload["spans"]["turn_wait"] for m in reports),
        bounds_sync=tuple(m.payload["bound_sync"] for m in reports),
        bounds_async=tuple(m.payload["bound_async"] for m in reports),
    )


def render_trace_report(stats: TraceStats) -> str:
    def fmt(values):
        if not values:
            return "-"
        return (f"n={len(values)} mean={sum(values) / len(values):.0f} "
                f"max={max(values)}")

    lines = [
        f"messages        in={stats.messages_in} out={stats.messages_out}",
        f"bot turns       {stats.bot_turns} ({stats.completed_turns} completed)",
        f"interrupts      {stats.interrupts}",
        f"resets          {stats.resets}",
        f"first token ms  {fmt(stats.first_token_latencies_ms)}",
        f"turn wait ms    {fmt(stats.turn_waits_ms)}",
        f"bound sync ms   {fmt(stats.bounds_sync)}",
        f"bound async ms  {fmt(stats.bounds_async)}",
    ]
    return "\n".join(lines)
