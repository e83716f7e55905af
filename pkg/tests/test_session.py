import json
from pathlib import Path

import pytest

import factories
from duplexkit.scenario import load_scenario_file
from duplexkit.service.driver import (
    check_expectations,
    run_scenario,
    stale_token_violations,
)
from duplexkit.turns.engine import CancelGeneration

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def kinds(trace):
    return trace.outbound_kinds()


class TestTurnFlow:
    def test_input_then_silence_yields_eot_then_tokens(self):
        trace = run_scenario(factories.simple_turn())
        ks = kinds(trace)
        assert ks.index("eot_detected") < ks.index("bot_token")
        assert "bot_text" in ks and "latency_report" in ks

    def test_interrupt_ack_precedes_further_tokens(self):
        trace = run_scenario(factories.interruption())
        ks = kinds(trace)
        ack = ks.index("interrupt_ack")
        before_ack = [m for m in trace.outbound[:ack]
                      if m.kind == "bot_token"]
        assert before_ack  # part of the first turn streamed before the barge-in
        assert stale_token_violations(trace.outbound) == []

    def test_cancel_emitted_at_input_timestamp(self):
        trace = run_scenario(factories.interruption(anchor=3))
        cancels = [(t, a) for t, a in trace.actions
                   if isinstance(a, CancelGeneration)]
        assert len(cancels) == 1
        cancel_t = cancels[0][0]
        ack = [m for m in trace.outbound if m.kind == "interrupt_ack"][0]
        assert ack.t_ms == cancel_t
        third_token = [m for m in trace.outbound if m.kind == "bot_token"][2]
        assert cancel_t == third_token.t_ms  # same simulated instant

    def test_interrupted_turn_keeps_exactly_anchor_tokens(self):
        trace = run_scenario(factories.interruption(anchor=3))
        first_turn = [m for m in trace.outbound
                      if m.kind == "bot_token" and m.payload["turn"] == 0]
        assert len(first_turn) == 3

    def test_reset_command_clears_buffers(self):
        trace = run_scenario(factories.reset_mid_session())
        updates = [m for m in trace.outbound if m.kind == "state_update"]
        resets = [m for m in trace.inbound if m.kind == "reset_command"]
        assert resets
        after = [m for m in updates if m.t_ms >= resets[0].t_ms]
        assert any(m.payload["buffered_chunks"] == 0 for m in after)
        # the session continued and replied after the reset
        assert "bot_text" in kinds(trace)

    def test_silence_initiated_turn(self):
        trace = run_scenario(factories.silence_initiated())
        ks = kinds(trace)
        assert ks.count("bot_initiate") == 1
        initiate = [m for m in trace.outbound if m.kind == "bot_initiate"][0]
        assert initiate.t_ms == 4000  # default silence window from t=0

    def test_unit_only_modality_feeds_units_directly(self):
        trace = run_scenario(factories.unit_only_turn())
        ks = kinds(trace)
        assert "eot_detected" in ks and "bot_text" in ks
        # no recognizer ran: nothing was ever confirmed
        assert trace.confirmed_words == []
        # 5 chunks x 2-3 units reach the context before the reply
        assert trace.context_unit_count >= 12

    def test_backend_fault_resets_and_continues(self):
        scenario = factories.build([
            factories.header("fault", lm={"tokens_per_second": 100}),
            factories.lm_eot(0.9, utterance="好"),
            factories.lm_turn(0, "回 覆", 0),
            factories.user_audio(100, "c0"),
            {"kind": "asr_script", "t": 100, "fail": True},
            factories.user_text(800, "好"),
        ])
        trace = run_scenario(scenario)
        ks = kinds(trace)
        assert "error" in ks
        assert ks.index("error") < ks.index("bot_text")


class TestDeterminism:
    def test_replay_is_byte_identical(self):
        for scenario in (factories.interruption(), factories.audio_turn()):
            a = run_scenario(scenario)
            b = run_scenario(scenario)
            assert a.trace_text() == b.trace_text()
            assert a.actions == b.actions
            assert a.chunk_plans == b.chunk_plans

    def test_latency_reports_satisfy_bound_relation(self):
        trace = run_scenario(factories.cap_forced())
        reports = [m for m in trace.outbound if m.kind == "latency_report"]
        assert reports
        for msg in reports:
            assert msg.payload["bound_async"] <= msg.payload["bound_sync"]


class TestCanonicalScenarios:
    @pytest.mark.parametrize("name", [
        "interruption", "silence_initiate", "hallucination", "gap_recovery"])
    def test_canonical_expectations_hold(self, name):
        scenario = load_scenario_file(SCENARIO_DIR / f"{name}.jsonl")
        trace = run_scenario(scenario)
        assert check_expectations(scenario, trace) == []

    @pytest.mark.parametrize("name", [
        "interruption", "silence_initiate", "hallucination", "gap_recovery"])
    def test_canonical_hold_in_sync_mode_too(self, name):
        scenario = load_scenario_file(SCENARIO_DIR / f"{name}.jsonl")
        trace = run_scenario(scenario, mode="sync")
        assert check_expectations(scenario, trace) == []
