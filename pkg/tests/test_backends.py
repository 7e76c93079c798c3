from __future__ import annotations

import json
import threading
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given
from hypothesis import strategies as st

from agentfield.backends import (
    AUTH_TOKEN_ENV,
    CallKey,
    GenerationParams,
    RemoteBackend,
    ScriptedBackend,
    fallback_text,
    load_script,
)
from agentfield.errors import BackendUnavailableError, ProtocolError, ScriptError
from agentfield.moves import parse_move

GOOD_BODY = {"choices": [{"message": {"content": "hello out there"}}]}


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        self.server.requests.append(
            (self.path, dict(self.headers), json.loads(body))
        )
        if self.server.responses:
            status, payload = self.server.responses.popleft()
        else:
            status, payload = 200, GOOD_BODY
        data = (
            payload.encode("utf-8")
            if isinstance(payload, str)
            else json.dumps(payload).encode("utf-8")
        )
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.requests = []
    server.responses = deque()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()


def make_remote(server, **kwargs) -> RemoteBackend:
    defaults = dict(
        endpoint_url=f"http://127.0.0.1:{server.server_address[1]}/v1",
        model_name="test-model",
        backoff_base_s=0.0,
        sleep=lambda s: None,
    )
    defaults.update(kwargs)
    return RemoteBackend(**defaults)


def test_remote_roundtrip_and_request_shape(stub_server):
    backend = make_remote(stub_server)
    params = GenerationParams()
    out = backend.generate("say hi", params, key=CallKey("agent0", 1, "message"))
    assert out == "hello out there"
    path, headers, body = stub_server.requests[0]
    assert path == "/v1/chat/completions"
    assert body["model"] == "test-model"
    assert body["messages"] == [{"role": "user", "content": "say hi"}]
    assert body["temperature"] == 0.7
    assert body["top_p"] == 0.95
    assert body["max_tokens"] == 256
    assert body["top_k"] == 40
    assert "Authorization" not in headers


def test_remote_bearer_token_from_env(stub_server, monkeypatch):
    monkeypatch.setenv(AUTH_TOKEN_ENV, "sekrit")
    backend = make_remote(stub_server)
    backend.generate("hi", GenerationParams())
    _, headers, _ = stub_server.requests[0]
    assert headers["Authorization"] == "Bearer sekrit"


def test_remote_url_forms(stub_server):
    port = stub_server.server_address[1]
    full = RemoteBackend(
        f"http://127.0.0.1:{port}/v1/chat/completions", "m"
    )
    assert full.url.endswith("/v1/chat/completions")
    bare = RemoteBackend(f"http://127.0.0.1:{port}/custom", "m")
    assert bare.url.endswith("/custom")


def test_remote_retries_then_succeeds(stub_server):
    sleeps = []
    backend = make_remote(
        stub_server, backoff_base_s=1.0, sleep=sleeps.append, max_retries=3
    )
    stub_server.responses.extend([(500, {"error": "boom"}), (200, GOOD_BODY)])
    assert backend.generate("hi", GenerationParams()) == "hello out there"
    assert sleeps == [1.0]
    assert len(stub_server.requests) == 2


def test_remote_gives_up_after_retries(stub_server):
    sleeps = []
    backend = make_remote(
        stub_server, backoff_base_s=1.0, sleep=sleeps.append, max_retries=2
    )
    stub_server.responses.extend([(500, {}), (502, {}), (503, {})])
    with pytest.raises(BackendUnavailableError, match="3 attempts"):
        backend.generate("hi", GenerationParams(), key=CallKey("agent1", 4, "move"))
    assert sleeps == [1.0, 2.0]
    assert len(stub_server.requests) == 3


def test_remote_drops_top_k_after_rejection(stub_server):
    backend = make_remote(stub_server)
    stub_server.responses.append(
        (400, {"error": "unrecognized parameter: top_k"})
    )
    assert backend.generate("hi", GenerationParams()) == "hello out there"
    first, second = stub_server.requests[0][2], stub_server.requests[1][2]
    assert "top_k" in first and "top_k" not in second
    # The drop sticks for later calls in the same session.
    backend.generate("again", GenerationParams())
    assert "top_k" not in stub_server.requests[2][2]


def test_remote_other_4xx_is_not_a_top_k_drop(stub_server):
    backend = make_remote(stub_server, max_retries=0)
    stub_server.responses.append((400, {"error": "model not found"}))
    with pytest.raises(BackendUnavailableError, match="HTTP 400"):
        backend.generate("hi", GenerationParams())


def test_remote_malformed_success_is_protocol_error(stub_server):
    backend = make_remote(stub_server, max_retries=3)
    stub_server.responses.append((200, {"choices": []}))
    with pytest.raises(ProtocolError):
        backend.generate("hi", GenerationParams())
    # Malformed success is a contract bug, not an outage: no retry.
    assert len(stub_server.requests) == 1

    stub_server.responses.append((200, "not json at all"))
    with pytest.raises(ProtocolError):
        backend.generate("hi", GenerationParams())


def test_remote_connection_refused():
    backend = RemoteBackend(
        "http://127.0.0.1:9/v1", "m", max_retries=0, sleep=lambda s: None,
        request_timeout_s=2.0,
    )
    with pytest.raises(BackendUnavailableError):
        backend.generate("hi", GenerationParams())


def test_scripted_lookup_and_fallback():
    backend = ScriptedBackend(
        table={("agent0", 1, "message"): "scripted words"}, fallback_seed=5
    )
    params = GenerationParams()
    assert (
        backend.generate("p", params, key=CallKey("agent0", 1, "message"))
        == "scripted words"
    )
    miss = backend.generate("p", params, key=CallKey("agent0", 2, "message"))
    assert miss == fallback_text("p", 5)
    assert backend.generate("p", params) == fallback_text("p", 5)


def test_fallback_is_pure_and_seed_sensitive():
    assert fallback_text("hello", 0) == fallback_text("hello", 0)
    outputs = {fallback_text("hello", seed) for seed in range(8)}
    assert len(outputs) > 1


@given(st.text(alphabet="abcdefghij klmnop", min_size=1, max_size=200),
       st.integers(0, 1000))
def test_fallback_always_contains_a_move(prompt, seed):
    command, ok = parse_move(fallback_text(prompt, seed))
    assert ok is True


def test_fallback_answers_forced_choice():
    prompt = "pick one\nA. first thing\nB. second thing\nanswer:"
    assert fallback_text(prompt, 0) in ("A", "B")


def test_empty_prompt_rejected():
    with pytest.raises(ValueError):
        ScriptedBackend().generate("", GenerationParams())


def test_load_script_roundtrip(tmp_path):
    path = tmp_path / "s.jsonl"
    path.write_text(
        json.dumps({"agent": "agent0", "step": 1, "phase": "move", "text": "x+1"})
        + "\n\n"
        + json.dumps({"agent": "agent1", "step": 1, "phase": "move", "text": "stay"})
        + "\n"
    )
    table = load_script(path)
    assert table[("agent0", 1, "move")] == "x+1"
    assert len(table) == 2


@pytest.mark.parametrize(
    "line,match",
    [
        ("{not json", "not valid JSON"),
        ('["list"]', "must be an object"),
        ('{"agent": "a", "step": 1, "phase": "move"}', "fields"),
        ('{"agent": "a", "step": 1, "phase": "dance", "text": "t"}', "unknown phase"),
    ],
)
def test_load_script_rejects_bad_lines(tmp_path, line, match):
    path = tmp_path / "bad.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(ScriptError, match=match):
        load_script(path)


def test_load_script_rejects_duplicates(tmp_path):
    record = {"agent": "a", "step": 1, "phase": "move", "text": "x+1"}
    path = tmp_path / "dup.jsonl"
    path.write_text(json.dumps(record) + "\n" + json.dumps(record) + "\n")
    with pytest.raises(ScriptError, match="duplicate"):
        load_script(path)


def test_load_script_missing_file(tmp_path):
    with pytest.raises(ScriptError, match="cannot read"):
        load_script(tmp_path / "absent.jsonl")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"temperature": -0.1},
        {"top_p": 0.0},
        {"top_p": 1.5},
        {"top_k": 0},
        {"max_tokens": 0},
    ],
)
def test_generation_params_validation(kwargs):
    with pytest.raises(ValueError):
        GenerationParams(**kwargs)
