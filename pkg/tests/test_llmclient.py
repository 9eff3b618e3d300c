from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from tabpilot.llmclient import (
    ChatRequest,
    LlmClient,
    LlmConfig,
    ReplayMiss,
    Transcript,
    TransportError,
)


def _request(content="plan please", model="heavy-default"):
    return ChatRequest(
        messages=[{"role": "system", "content": "you plan"},
                  {"role": "user", "content": content}],
        model=model,
    )


class TestDigest:
    def test_digest_depends_only_on_model_messages_temperature(self):
        a = _request()
        b = ChatRequest(messages=a.messages, model=a.model, temperature=0.0,
                        max_tokens=999)
        assert a.digest() == b.digest()

    def test_digest_changes_with_content(self):
        assert _request("x").digest() != _request("y").digest()

    def test_empty_messages_rejected(self):
        with pytest.raises(ValueError):
            ChatRequest(messages=[], model="m")

    def test_bad_role_rejected(self):
        with pytest.raises(ValueError):
            ChatRequest(messages=[{"role": "robot", "content": "x"}], model="m")


class TestReplay:
    def test_replay_returns_recorded_response_byte_identical(self, tmp_path):
        path = tmp_path / "transcript.jsonl"
        recording = Transcript(path=path)
        request = _request()
        recording.record(request, "the recorded plan ✓")
        replay = LlmClient(LlmConfig(), mode="replay",
                           transcript=Transcript.load(path))
        assert replay.complete(request) == "the recorded plan ✓"

    def test_edited_prompt_names_divergent_message(self, tmp_path):
        path = tmp_path / "transcript.jsonl"
        recording = Transcript(path=path)
        recording.record(_request("original wording"), "reply")
        replay = LlmClient(LlmConfig(), mode="replay",
                           transcript=Transcript.load(path))
        with pytest.raises(ReplayMiss) as exc:
            replay.complete(_request("edited wording"))
        assert "index 1" in str(exc.value)
        assert "edited wording" in str(exc.value)

    def test_replay_requires_transcript(self):
        with pytest.raises(ValueError):
            LlmClient(LlmConfig(), mode="replay")


class _FlakyHandler(BaseHTTPRequestHandler):
    statuses: list[int] = []
    calls: int = 0

    def do_POST(self):
        cls = type(self)
        status = cls.statuses[min(cls.calls, len(cls.statuses) - 1)]
        cls.calls += 1
        length = int(self.headers.get("Content-Length", "0"))
        self.rfile.read(length)
        if status == 200:
            body = json.dumps({
                "choices": [{"message": {"content": "recovered"}}]
            }).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        else:
            self.send_response(status)
            self.send_header("Content-Length", "0")
            self.end_headers()

    def log_message(self, *args):
        pass


@pytest.fixture()
def flaky_server():
    server = HTTPServer(("127.0.0.1", 0), _FlakyHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()


class TestTransport:
    def test_backoff_recovers_after_two_server_errors(self, flaky_server):
        _FlakyHandler.statuses = [500, 500, 200]
        _FlakyHandler.calls = 0
        naps = []
        config = LlmConfig(
            endpoint_url=f"http://127.0.0.1:{flaky_server.server_port}/chat")
        client = LlmClient(config, mode="live", sleeper=naps.append)
        assert client.complete(_request()) == "recovered"
        assert client.request_log == [500, 500, 200]
        assert naps == [0.5, 1.0]  # exponential backoff between attempts

    def test_exhausted_retries_raise_transport_error(self, flaky_server):
        _FlakyHandler.statuses = [500]
        _FlakyHandler.calls = 0
        config = LlmConfig(
            endpoint_url=f"http://127.0.0.1:{flaky_server.server_port}/chat")
        client = LlmClient(config, mode="live", sleeper=lambda s: None)
        with pytest.raises(TransportError):
            client.complete(_request())
        assert client.request_log == [500, 500, 500]

    def test_record_mode_appends_to_transcript(self, flaky_server, tmp_path):
        _FlakyHandler.statuses = [200]
        _FlakyHandler.calls = 0
        path = tmp_path / "t.jsonl"
        config = LlmConfig(
            endpoint_url=f"http://127.0.0.1:{flaky_server.server_port}/chat")
        client = LlmClient(config, mode="record", transcript=Transcript(path=path))
        client.complete(_request())
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["response"] == "recovered"

    def test_missing_endpoint_fails_fast(self):
        client = LlmClient(LlmConfig(), mode="live")
        with pytest.raises(TransportError):
            client.complete(_request())
