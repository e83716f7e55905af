"""Dialogue-quality scoring through a judge model.

The judge receives a fixed rating rubric as its system prompt and the
dialogue history as the user prompt, and replies with three 1-to-5
ratings (relevance, adherence to the system prompt, grammar) plus
justifications. The overall score is always recomputed from the three
ratings; judges are asked to compute it but get it wrong often enough
that their self-reported value is ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Tuple

from ..errors import JudgeParseError

JUDGE_SYSTEM_PROMPT = """\
Please evaluate the following conversation between a human user and a voice agent. Rate each aspect on a scale of 1 to 5, where 1 is poor and 5 is excellent.

1. Relevance and Accuracy: Does the machine correctly respond to the user's requests?
    - Consider if the responses address the user's questions and provide relevant information.

2. Adherence to System Prompt: Does the machine follow the cues from the system prompt?
    - Assess if the responses align with the role and knowledge specified in the system prompt.

3. Grammatical Correctness: Can the machine produce grammatically correct responses?
    - Evaluate the linguistic quality of the machine's replies, including sentence structure and word usage.

For each aspect, provide a brief justification for your rating.

Finally, calculate an overall score by averaging the three ratings, rounded to the nearest whole number.

Overall Score: (Relevance + Adherence + Grammar) / 3"""


def overall_score(relevance: int, adherence: int, grammar: int) -> int:
    """Mean of the three ratings rounded half away from zero.

    Exact integer arithmetic: floor(mean + 1/2) = (2*sum + 3) // 6.
    """
    total = relevance + adherence + grammar
    return (2 * total + 3) // 6


@dataclass(frozen=True)
class JudgeScores:
    relevance: int
    adherence: int
    grammar: int
    overall: int
    justifications: Tuple[str, str, str] = ("", "", "")

    def __post_init__(self):
        for name in ("relevance", "adherence", "grammar"):
            value = getattr(self, name)
            if value not in (1, 2, 3, 4, 5):
                raise ValueError(f"{name} rating {value} outside 1..5")
        expected = overall_score(self.relevance, self.adherence, self.grammar)
        if self.overall != expected:
            raise ValueError(
                f"overall {self.overall} does not equal round(mean) = {expected}")

    @classmethod
    def from_ratings(cls, relevance: int, adherence: int, grammar: int,
                     justifications: Tuple[str, str, str] = ("", "", "")
                     ) -> "JudgeScores":
        return cls(relevance, adherence, grammar,
                   overall_score(relevance, adherence, grammar),
                   justifications)


def build_judge_prompt(transcript: str) -> Tuple[str, str]:
    """(system prompt, user prompt) for one dialogue history."""
    if not transcript:
        raise ValueError("transcript must be non-empty")
    return JUDGE_SYSTEM_PROMPT, transcript


_DIMENSIONS = (
    ("relevance", ("relevance",)),
    ("adherence", ("adherence", "system prompt")),
    ("grammar", ("grammar", "grammatical")),
)

_RATING = re.compile(r"\b([1-5])\s*(?:/\s*5)?\b")


def parse_judge_reply(text: str) -> JudgeScores:
    """Extract the three ratings (and justifications) from a judge reply.

    Tolerates "Relevance and Accuracy: 4", "2. Adherence ... - 3/5" and
    similar shapes. The overall line, if present, is ignored in favour of
    the recomputed value. Fewer than three parseable ratings raise
    JudgeParseError carrying the raw reply.
    """
    ratings: dict = {}
    justifications: dict = {}
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        lowered = line.lower()
        if lowered.startswith("overall") or "overall score" in lowered:
            continue
        for dim, keywords in _DIMENSIONS:
            if dim in ratings or not any(k in lowered for k in keywords):
                continue
            key_end = max(lowered.find(k) + len(k)
                          for k in keywords if k in lowered)
            match = _RATING.search(line[key_end:])
            if match:
                ratings[dim] = int(match.group(1))
                tail = line[key_end + match.end():].lstrip(" .:;-–")
                justifications[dim] = tail
                break
    if len(ratings) < 3:
        missing = [d for d, _ in _DIMENSIONS if d not in ratings]
        raise JudgeParseError(
            f"found {len(ratings)} of 3 ratings (missing: {', '.join(missing)})",
            text)
    return JudgeScores.from_ratings(
        ratings["relevance"], ratings["adherence"], ratings["grammar"],
        (justifications.get("relevance", ""),
         justifications.get("adherence", ""),
         justifications.get("grammar", "")))


def format_scores(scores: JudgeScores) -> str:
    """Canonical reply text; parse_judge_reply inverts it exactly."""
    lines = []
    names = (("Relevance and Accuracy", scores.relevance),
             ("Adherence to System Prompt", scores.adherence),
             ("Grammatical Correctness", scores.grammar))
    for (label, value), just in zip(names, scores.justifications):
        suffix = f" - {just}" if just else ""
        lines.append(f"{label}: {value}{suffix}")
    lines.append(f"Overall Score: {scores.overall}")
    return "\n".join(lines)


class ScriptedJudge:
    """Replays canned judge replies; the desk-scale judge backend."""

    def __init__(self, replies: Sequence[str]):
        self.replies = list(replies)
        self.cursor = 0

    def judge(self, system_prompt: str, user_prompt: str) -> str:
        if self.cursor >= len(self.replies):
            raise IndexError("judge script exhausted")
        reply = self.replies[self.cursor]
        self.cursor += 1
        return reply
