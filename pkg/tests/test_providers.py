import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from ramanqa.errors import EmbeddingError, ProviderError, RetryableProviderError
from ramanqa.providers import HttpChatProvider, HttpEmbeddingProvider, StaticChatProvider


class _Handler(BaseHTTPRequestHandler):
    behavior = "ok"  # ok | openai | error500 | badjson | wrongdim

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        self.server.last_request = body  # type: ignore[attr-defined]
        self.server.last_auth = self.headers.get("Authorization")  # type: ignore[attr-defined]
        if self.behavior == "error500":
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b"boom")
            return
        if self.behavior == "badjson":
            payload = b"not json {"
        elif self.behavior == "openai":
            payload = json.dumps(
                {"choices": [{"message": {"content": "hello from choices"}}]}
            ).encode()
        elif self.behavior == "wrongdim":
            payload = json.dumps({"embedding": [1.0, 2.0]}).encode()
        elif "input" in body:
            payload = json.dumps({"data": [{"embedding": [0.0] * 7 + [1.0]}]}).encode()
        else:
            payload = json.dumps({"content": "plain content"}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def do_HEAD(self):
        self.send_response(200)
        self.end_headers()

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    httpd = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    _Handler.behavior = "ok"
    yield httpd
    httpd.shutdown()


def endpoint(httpd):
    return f"http://127.0.0.1:{httpd.server_address[1]}/v1/chat"


class TestHttpChatProvider:
    def test_sends_system_and_user_messages(self, server):
        provider = HttpChatProvider(endpoint(server), model="m1", api_key="sk-test")
        out = provider.complete("sys text", "user text")
        assert out == "plain content"
        sent = server.last_request
        assert sent["model"] == "m1"
        assert sent["messages"][0] == {"role": "system", "content": "sys text"}
        assert sent["messages"][1] == {"role": "user", "content": "user text"}
        assert server.last_auth == "Bearer sk-test"

    def test_openai_shape_parsed(self, server):
        _Handler.behavior = "openai"
        provider = HttpChatProvider(endpoint(server))
        assert provider.complete("s", "u") == "hello from choices"

    def test_server_error_is_retryable(self, server):
        _Handler.behavior = "error500"
        provider = HttpChatProvider(endpoint(server))
        with pytest.raises(RetryableProviderError):
            provider.complete("s", "u")

    def test_bad_json_is_provider_error(self, server):
        _Handler.behavior = "badjson"
        provider = HttpChatProvider(endpoint(server))
        with pytest.raises(ProviderError):
            provider.complete("s", "u")

    def test_unreachable_is_retryable(self):
        provider = HttpChatProvider("http://127.0.0.1:1/nothing", timeout=0.2)
        with pytest.raises(RetryableProviderError):
            provider.complete("s", "u")

    def test_healthcheck(self, server):
        assert HttpChatProvider(endpoint(server)).healthcheck()
        assert not HttpChatProvider("http://127.0.0.1:1/no").healthcheck()

    def test_key_from_environment(self, server, monkeypatch):
        monkeypatch.setenv("RAMANQA_API_KEY", "sk-env")
        provider = HttpChatProvider(endpoint(server))
        provider.complete("s", "u")
        assert server.last_auth == "Bearer sk-env"


class TestHttpEmbeddingProvider:
    def test_embeds(self, server):
        provider = HttpEmbeddingProvider(endpoint(server), dim=8)
        vec = provider.embed("some text")
        assert vec.shape == (8,)
        assert vec[-1] == 1.0

    def test_wrong_dimension_is_hard_error(self, server):
        _Handler.behavior = "wrongdim"
        provider = HttpEmbeddingProvider(endpoint(server), dim=8)
        with pytest.raises(EmbeddingError):
            provider.embed("text")

    def test_empty_text_rejected_locally(self, server):
        provider = HttpEmbeddingProvider(endpoint(server), dim=8)
        with pytest.raises(EmbeddingError):
            provider.embed("  ")


class TestStaticChatProvider:
    def test_rotates_then_repeats_last(self):
        p = StaticChatProvider(["a", "b"])
        assert [p.complete("s", "u") for _ in range(3)] == ["a", "b", "b"]
