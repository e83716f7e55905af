import pytest
from hypothesis import given
from hypothesis import strategies as st

from duplexkit.core.clock import EventQueue, SimulatedClock
from duplexkit.core.config import SessionConfig, load_config, parse_config_text
from duplexkit.core.tokens import (
    EOT,
    Header,
    Modality,
    Text,
    TimedWord,
    Unit,
    token_from_json,
    token_to_json,
    validate_unit,
)
from duplexkit.errors import ConfigError


class TestTokens:
    def test_unit_negative_rejected(self):
        with pytest.raises(ValueError):
            Unit(-1)

    def test_unit_vocab_bound(self):
        assert validate_unit(1023, 1024) == 1023
        with pytest.raises(ValueError):
            validate_unit(1024, 1024)

    def test_header_nonempty(self):
        with pytest.raises(ValueError):
            Header("")

    def test_word_span_ordering(self):
        with pytest.raises(ValueError):
            TimedWord("x", 100, 50)
        TimedWord("x", 100, 100)  # zero-length span is legal

    def test_modality_parse(self):
        assert Modality.parse("Hybrid") is Modality.HYBRID
        with pytest.raises(ValueError):
            Modality.parse("audio")

    @pytest.mark.parametrize("token", [
        Text("你好", 7), Unit(42), Header("User"), EOT,
    ])
    def test_json_round_trip(self, token):
        assert token_from_json(token_to_json(token)) == token


class TestConfig:
    def test_defaults(self):
        config = SessionConfig()
        assert config.asr_cadence_ms == 300
        assert config.unit_chunk_ms == 100
        assert config.unit_window_ms == 1000
        assert config.gap_recovery_max_ms == 2000
        assert config.unit_rate_hz == 25
        assert config.turn_wait_cap_ms == 1000
        assert config.unit_t_ms == 40
        assert config.window_chunks == 10

    def test_window_multiple_of_chunk(self):
        with pytest.raises(ConfigError):
            SessionConfig(unit_window_ms=1050)

    def test_threshold_range(self):
        with pytest.raises(ConfigError):
            SessionConfig(eot_threshold=0.0)
        with pytest.raises(ConfigError):
            SessionConfig(eot_threshold=1.0)

    def test_parse_text(self):
        config = parse_config_text(
            "# session tunables\n"
            "asr_cadence_ms = 150\n"
            "eot_threshold = 0.7\n"
            "\n"
            "unit_vocab_size = 500\n")
        assert config.asr_cadence_ms == 150
        assert config.eot_threshold == 0.7
        assert config.unit_vocab_size == 500
        assert config.unit_window_ms == 1000  # default fills the gap

    def test_parse_unknown_key(self):
        with pytest.raises(ConfigError):
            parse_config_text("cadence = 1")

    def test_parse_bad_line(self):
        with pytest.raises(ConfigError):
            parse_config_text("asr_cadence_ms 300")

    def test_load_file(self, tmp_path):
        path = tmp_path / "session.conf"
        path.write_text("silence_initiate_ms = 2500\n", encoding="utf-8")
        assert load_config(path).silence_initiate_ms == 2500


class TestClock:
    @given(st.lists(st.integers(min_value=0, max_value=1000), max_size=50))
    def test_advance_sums_exactly(self, deltas):
        clock = SimulatedClock()
        for d in deltas:
            clock.advance_by(d)
        assert clock.now_ms == sum(deltas)

    def test_no_backwards(self):
        clock = SimulatedClock(100)
        with pytest.raises(ValueError):
            clock.advance_to(99)

    def test_queue_order_and_ties(self):
        clock = SimulatedClock()
        queue = EventQueue(clock)
        out = []
        queue.at(20, lambda: out.append("late20"), late=True)
        queue.at(20, lambda: out.append("a20"))
        queue.at(10, lambda: out.append("b10"))
        handle = queue.at(15, lambda: out.append("dropped"))
        handle.cancel()
        queue.run_all()
        assert out == ["b10", "a20", "late20"]
        assert clock.now_ms == 20

    def test_queue_replays_identically(self):
        def run():
            clock = SimulatedClock()
            queue = EventQueue(clock)
            log = []
            queue.at(5, lambda: log.append((clock.now_ms, "x")))
            queue.at(5, lambda: queue.after(3, lambda: log.append((clock.now_ms, "y"))))
            queue.run_all()
            return log
        assert run() == run() == [(5, "x"), (8, "y")]
