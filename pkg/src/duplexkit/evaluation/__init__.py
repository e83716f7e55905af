"""Evaluation harness: character error rate, judge scoring, agent forum."""

from .distance import KERNEL, EmptyReferenceError, cer, levenshtein, levenshtein_py
from .forum import (
    ERROR,
    MAX_TURNS,
    SILENCE,
    AgentSpec,
    ForumTranscript,
    ForumTurn,
    run_forum,
)
from .judge import (
    JUDGE_SYSTEM_PROMPT,
    JudgeScores,
    ScriptedJudge,
    build_judge_prompt,
    format_scores,
    overall_score,
    parse_judge_reply,
)
from .report import (
    EvalFixture,
    ReportRow,
    TraceStats,
    fixture_report,
    load_fixtures,
    render_fixture_report,
    render_trace_report,
    trace_stats,
)

__all__ = [
    "KERNEL", "EmptyReferenceError", "cer", "levenshtein", "levenshtein_py",
    "ERROR", "MAX_TURNS", "SILENCE", "AgentSpec", "ForumTranscript",
    "ForumTurn", "run_forum", "JUDGE_SYSTEM_PROMPT", "JudgeScores",
    "ScriptedJudge", "build_judge_prompt", "format_scores", "overall_score",
    "parse_judge_reply", "EvalFixture", "ReportRow", "TraceStats",
    "fixture_report", "load_fixtures", "render_fixture_report",
    "render_trace_report", "trace_stats",
]
