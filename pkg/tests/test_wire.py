import pytest
from hypothesis import given
from hypothesis import strategies as st

from duplexkit.errors import ProtocolError, WireDecodeError
from duplexkit.service.wire import (
    KINDS,
    SequenceGate,
    WireMessage,
    decode_message,
    encode_message,
    format_trace,
    format_trace_line,
    parse_trace,
)


class TestCodec:
    def test_reset_command_round_trip(self):
        msg = WireMessage("reset_command", 100, 0, {"text": "==="})
        line = encode_message(msg)
        assert line.endswith(b"\n") and line.count(b"\n") == 1
        assert decode_message(line) == msg

    def test_reset_payload_enforced(self):
        with pytest.raises(WireDecodeError):
            WireMessage("reset_command", 0, 0, {"text": "=="})

    def test_newline_in_payload_survives(self):
        msg = WireMessage("user_text_chunk", 5, 1, {"text": "a\nb\r\nc"})
        encoded = encode_message(msg)
        assert encoded.count(b"\n") == 1  # only the terminator
        assert decode_message(encoded) == msg

    def test_garbage_rejected_softly(self):
        with pytest.raises(WireDecodeError):
            decode_message(b"\xff\xfe garbage")
        with pytest.raises(WireDecodeError):
            decode_message(b"not json\n")

    def test_unknown_kind_echoed(self):
        with pytest.raises(WireDecodeError) as exc:
            decode_message(b'{"kind":"warp","t":0,"seq":0,"payload":{}}')
        assert "warp" in str(exc.value)

    def test_missing_fields(self):
        with pytest.raises(WireDecodeError):
            decode_message(b'{"kind":"bot_token","seq":0,"payload":{}}')

    def test_unencodable_payload(self):
        msg = WireMessage("error", 0, 0, {"oops": object()})
        with pytest.raises(WireDecodeError):
            encode_message(msg)

    @given(st.sampled_from([k for k in KINDS if k != "reset_command"]),
           st.integers(min_value=0, max_value=10**9),
           st.integers(min_value=0, max_value=10**6),
           st.dictionaries(
               st.text(min_size=1, max_size=8),
               st.one_of(st.text(max_size=20), st.integers(), st.booleans(),
                         st.none()),
               max_size=4))
    def test_round_trip_fuzz(self, kind, t, seq, payload):
        msg = WireMessage(kind, t, seq, payload)
        assert decode_message(encode_message(msg)) == msg


class TestSequenceGate:
    def test_regression_detected(self):
        gate = SequenceGate("inbound")
        gate.check(WireMessage("user_text_chunk", 0, 5, {"text": "a"}))
        with pytest.raises(ProtocolError):
            gate.check(WireMessage("user_text_chunk", 1, 4, {"text": "b"}))

    def test_equal_seq_rejected(self):
        gate = SequenceGate("inbound")
        gate.check(WireMessage("user_text_chunk", 0, 1, {"text": "a"}))
        with pytest.raises(ProtocolError):
            gate.check(WireMessage("user_text_chunk", 1, 1, {"text": "b"}))


class TestTrace:
    def test_round_trip(self):
        msgs = [(">", WireMessage("user_text_chunk", 10, 0, {"text": "你好"})),
                ("<", WireMessage("bot_token", 20, 0,
                                  {"token": {"type": "eot"}}))]
        text = format_trace(msgs)
        assert parse_trace(text) == msgs

    def test_bad_direction_rejected(self):
        with pytest.raises(ValueError):
            format_trace_line("^", WireMessage("error", 0, 0, {}))

    def test_parse_error_carries_line(self):
        with pytest.raises(WireDecodeError) as exc:
            parse_trace("> 0 not json\n")
        assert "line 1" in str(exc.value)
