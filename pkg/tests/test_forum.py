import pytest

from duplexkit.backends import ScriptedLm, hybrid_reply
from duplexkit.core.config import SessionConfig
from duplexkit.core.tokens import Text
from duplexkit.evaluation.forum import (
    ERROR,
    MAX_TURNS,
    SILENCE,
    AgentSpec,
    run_forum,
)
from duplexkit.turns.prompts import format_system_prompt
from duplexkit.core.tokens import Modality


def reply(text, upw=0):
    return hybrid_reply(text.split(), upw, 0, 1024)


def coach_spec(turns, silence_ms=4000, fail_at=None):
    return AgentSpec(
        agent_id="coach",
        system_prompt=format_system_prompt(
            Modality.HYBRID, Modality.HYBRID,
            "You are a professional fitness coach guiding a beginner."),
        lm=ScriptedLm(turns=turns, default_eot=0.9, tokens_per_second=100,
                      fail_at=fail_at),
        config=SessionConfig(silence_initiate_ms=silence_ms))


def trainee_spec(turns, silence_ms=60_000, fail_at=None):
    return AgentSpec(
        agent_id="trainee",
        system_prompt=format_system_prompt(
            Modality.HYBRID, Modality.HYBRID,
            "You are a beginner asking how to start training."),
        lm=ScriptedLm(turns=turns, default_eot=0.9, tokens_per_second=100,
                      fail_at=fail_at),
        config=SessionConfig(silence_initiate_ms=silence_ms))


COACH_TURNS = [reply("歡 迎 今 天 想 練 什 麼"), reply("先 從 深 蹲 開 始"),
               reply("很 好 保 持 節 奏"), reply("今 天 就 到 這")]
TRAINEE_TURNS = [reply("我 想 減 重"), reply("好 的 教 練"),
                 reply("收 到 謝 謝"), reply("明 天 見")]


class TestForum:
    def test_max_turns_termination(self):
        transcript = run_forum(coach_spec(COACH_TURNS),
                               trainee_spec(TRAINEE_TURNS),
                               scenario="fitness", max_turns=4)
        assert transcript.termination_reason == MAX_TURNS
        assert len(transcript.turns) <= 4
        assert len(transcript.turns) == 4

    def test_agents_alternate(self):
        transcript = run_forum(coach_spec(COACH_TURNS),
                               trainee_spec(TRAINEE_TURNS),
                               scenario="fitness", max_turns=6)
        ids = [t.agent_id for t in transcript.turns]
        assert ids == ["coach", "trainee"] * 3

    def test_silence_termination_when_scripts_exhaust(self):
        transcript = run_forum(coach_spec(COACH_TURNS[:1]),
                               trainee_spec([]),
                               scenario="fitness", max_turns=10)
        assert transcript.termination_reason == SILENCE
        assert len(transcript.turns) == 1

    def test_error_preserves_partial_transcript(self):
        # the trainee's second reply (fourth turn overall) blows up
        transcript = run_forum(
            coach_spec(COACH_TURNS),
            trainee_spec(TRAINEE_TURNS, fail_at=(1, 2)),
            scenario="fitness", max_turns=10)
        assert transcript.termination_reason == ERROR
        assert len(transcript.turns) == 3
        assert transcript.errors

    def test_swapping_scripts_relabels_transcript(self):
        a = run_forum(coach_spec(COACH_TURNS), trainee_spec(TRAINEE_TURNS),
                      scenario="fitness", max_turns=4)
        b = run_forum(coach_spec(TRAINEE_TURNS, silence_ms=60_000),
                      trainee_spec(COACH_TURNS, silence_ms=4000),
                      scenario="fitness", max_turns=4)
        texts_a = [t.text for t in a.turns]
        texts_b = [t.text for t in b.turns]
        assert texts_a == texts_b
        assert [t.agent_id for t in a.turns] == ["coach", "trainee"] * 2
        assert [t.agent_id for t in b.turns] == ["trainee", "coach"] * 2

    def test_dialogue_text_render(self):
        transcript = run_forum(coach_spec(COACH_TURNS[:1]), trainee_spec([]),
                               scenario="fitness", max_turns=2)
        assert transcript.dialogue_text().startswith("coach: 歡迎")

    def test_jsonl_export(self):
        transcript = run_forum(coach_spec(COACH_TURNS),
                               trainee_spec(TRAINEE_TURNS),
                               scenario="fitness", max_turns=4)
        lines = transcript.to_jsonl().splitlines()
        assert len(lines) == 5  # header + four turns
        import json
        head = json.loads(lines[0])
        assert head["kind"] == "forum" and head["termination"] == "max_turns"
        first = json.loads(lines[1])
        assert first["kind"] == "forum_turn" and first["agent"] == "coach"

    def test_timestamps_monotone(self):
        transcript = run_forum(coach_spec(COACH_TURNS),
                               trainee_spec(TRAINEE_TURNS),
                               scenario="fitness", max_turns=4)
        ends = [t.ended_ms for t in transcript.turns]
        assert ends == sorted(ends)
