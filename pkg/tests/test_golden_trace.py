"""Golden-file check: the canonical interruption scenario must replay to
the exact committed byte stream, message for message."""

from pathlib import Path

from duplexkit.scenario import load_scenario_file
from duplexkit.service.driver import run_scenario
from duplexkit.service.wire import parse_trace

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "fixtures" / "golden_interruption.trace"
SCENARIO = ROOT / "scenarios" / "interruption.jsonl"


def test_interruption_scenario_matches_golden_bytes():
    scenario = load_scenario_file(SCENARIO)
    trace = run_scenario(scenario)
    assert trace.trace_text() == GOLDEN.read_text(encoding="utf-8")


def test_golden_trace_parses_and_honors_cancellation():
    entries = parse_trace(GOLDEN.read_text(encoding="utf-8"))
    outbound = [m for d, m in entries if d == "<"]
    cancelled = None
    for msg in outbound:
        if msg.kind == "interrupt_ack":
            cancelled = msg.payload["cancelled_gen"]
        elif msg.kind in ("bot_token", "bot_audio_ref") and cancelled is not None:
            assert msg.payload["gen"] != cancelled
