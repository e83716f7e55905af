import json
import threading

import pytest
from fastapi.testclient import TestClient

from duplexkit.service.server import ServerOptions, build_app
from duplexkit.service.wire import WireMessage, decode_message, encode_message


def line(kind, t, seq, payload):
    return encode_message(WireMessage(kind, t, seq, payload)).decode("utf-8")


def drain(ws, want_kind, limit=200):
    """Receive frames until a message of want_kind arrives."""
    got = []
    for _ in range(limit):
        msg = decode_message(ws.receive_text())
        got.append(msg)
        if msg.kind == want_kind:
            return got
    raise AssertionError(f"never saw {want_kind}; got {[m.kind for m in got]}")


@pytest.fixture()
def sim_client(tmp_path):
    options = ServerOptions(mode="sim", votes_path=tmp_path / "votes.jsonl")
    app = build_app(options)
    with TestClient(app) as client:
        yield client, options


class TestSimTransport:
    def test_text_turn_round_trip(self, sim_client):
        client, _ = sim_client
        with client.websocket_connect("/session") as ws:
            first = decode_message(ws.receive_text())
            assert first.kind == "state_update"
            ws.send_text(line("user_text_chunk", 100, 0, {"text": "你好 啊"}))
            got = drain(ws, "bot_text")
            kinds = [m.kind for m in got]
            assert "eot_detected" in kinds and "bot_token" in kinds
            text = [m for m in got if m.kind == "bot_text"][0]
            assert "你好" in text.payload["text"]

    def test_garbage_line_survives(self, sim_client):
        client, _ = sim_client
        with client.websocket_connect("/session") as ws:
            decode_message(ws.receive_text())
            ws.send_text("this is not a wire message")
            msg = decode_message(ws.receive_text())
            assert msg.kind == "error"
            ws.send_text(line("user_text_chunk", 50, 0, {"text": "喂"}))
            drain(ws, "bot_text")

    def test_seq_regression_closes_session(self, sim_client):
        client, _ = sim_client
        with client.websocket_connect("/session") as ws:
            decode_message(ws.receive_text())
            ws.send_text(line("user_text_chunk", 10, 5, {"text": "一"}))
            drain(ws, "bot_text")
            ws.send_text(line("user_text_chunk", 9999, 4, {"text": "二"}))
            got = drain(ws, "error")
            assert got[-1].payload["code"] == "protocol"

    def test_feedback_appends_votes(self, sim_client):
        client, options = sim_client
        with client.websocket_connect("/session") as ws:
            decode_message(ws.receive_text())
            ws.send_text(line("feedback", 5, 0,
                              {"turn": 0, "vote": "up", "tag": "flow"}))
            ws.send_text(line("user_text_chunk", 10, 1, {"text": "好"}))
            drain(ws, "bot_text")
        votes = options.votes_path.read_text(encoding="utf-8").splitlines()
        assert len(votes) == 1
        assert json.loads(votes[0])["vote"] == "up"

    def test_interleaved_sessions_do_not_leak(self, sim_client):
        client, _ = sim_client
        words = ["蘋果", "香蕉", "櫻桃"]
        with client.websocket_connect("/session") as a, \
                client.websocket_connect("/session") as b, \
                client.websocket_connect("/session") as c:
            sockets = [a, b, c]
            for ws in sockets:
                decode_message(ws.receive_text())
            # interleave the sends before reading anything back
            for i, (ws, word) in enumerate(zip(sockets, words)):
                ws.send_text(line("user_text_chunk", 10 + i, 0, {"text": word}))
            for ws, word in zip(sockets, words):
                got = drain(ws, "bot_text")
                text = [m for m in got if m.kind == "bot_text"][0]
                assert word in text.payload["text"]
                others = [w for w in words if w != word]
                assert all(o not in text.payload["text"] for o in others)
                seqs = [m.seq for m in got]
                assert seqs == sorted(seqs)

    def test_registry_reports_sessions(self, sim_client):
        client, _ = sim_client
        with client.websocket_connect("/session"):
            active = client.get("/sessions").json()
            assert len(active) == 1


class TestLiveTransport:
    def test_live_echo_smoke(self, tmp_path):
        app = build_app(ServerOptions(mode="live"))
        with TestClient(app) as client:
            with client.websocket_connect("/session") as ws:
                first = decode_message(ws.receive_text())
                assert first.kind == "state_update"
                ws.send_text(line("user_text_chunk", 0, 0, {"text": "測試"}))
                got = drain(ws, "bot_text")
                text = [m for m in got if m.kind == "bot_text"][0]
                assert "測試" in text.payload["text"]
