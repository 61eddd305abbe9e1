"""Chat-completion and embedding providers.

Remote providers speak a JSON-over-HTTP shape (system + user messages in,
text out; text in, embedding out) with the API key taken from config or
the environment. All tests and the acceptance suite run on the
deterministic local/mock implementations.
"""

from __future__ import annotations

import json
import os
from typing import Protocol

import requests

from .errors import EmbeddingError, ProviderError, RetryableProviderError

API_KEY_ENV = "RAMANQA_API_KEY"


class ChatProvider(Protocol):
    def complete(self, system: str, user: str) -> str: ...

    def healthcheck(self) -> bool: ...


def _resolve_key(api_key: str | None) -> str | None:
    return api_key or os.environ.get(API_KEY_ENV)


class HttpChatProvider:
    """POSTs {model, messages:[{system},{user}]} and reads the reply text.

    Accepts both an OpenAI-style ``choices[0].message.content`` response and
    a bare ``{"content": ...}`` body.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        api_key: str | None = None,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = _resolve_key(api_key)
        self.timeout = timeout

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def complete(self, system: str, user: str) -> str:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        try:
            resp = requests.post(
                self.endpoint, json=body, headers=self._headers(), timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise RetryableProviderError(f"chat provider unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise RetryableProviderError(
                f"chat provider error {resp.status_code}: {resp.text[:200]}"
            )
        if resp.status_code != 200:
            raise ProviderError(
                f"chat provider rejected request ({resp.status_code}): {resp.text[:200]}"
            )
        try:
            payload = resp.json()
        except json.JSONDecodeError as exc:
            raise ProviderError(f"chat provider returned non-JSON body: {exc}") from exc
        try:
            if "choices" in payload:
                return payload["choices"][0]["message"]["content"]
            return payload["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(
                f"chat provider response missing content: {payload!r:.200}"
            ) from exc

    def healthcheck(self) -> bool:
        try:
            requests.head(self.endpoint, timeout=2.0)
        except requests.RequestException:
            return False
        return True


class HttpEmbeddingProvider:
    """POSTs {model, input} and reads a float vector back."""

    def __init__(
        self,
        endpoint: str,
        dim: int,
        model: str = "default",
        api_key: str | None = None,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint
        self.dim = dim
        self.model = model
        self.api_key = _resolve_key(api_key)
        self.timeout = timeout
        self.provider_tag = f"remote:{model}"

    def embed(self, text: str):
        import numpy as np

        if not text or not text.strip():
            raise EmbeddingError("cannot embed empty text")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                self.endpoint,
                json={"model": self.model, "input": text},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise RetryableProviderError(f"embedding provider unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise RetryableProviderError(
                f"embedding provider error {resp.status_code}: {resp.text[:200]}"
            )
        payload = resp.json()
        if "data" in payload:
            values = payload["data"][0]["embedding"]
        else:
            values = payload["embedding"]
        vec = np.asarray(values, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise EmbeddingError(
                f"embedding dimension mismatch: got {vec.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(vec)):
            raise EmbeddingError("embedding contains non-finite values")
        return vec

    def healthcheck(self) -> bool:
        try:
            requests.head(self.endpoint, timeout=2.0)
        except requests.RequestException:
            return False
        return True


class StaticChatProvider:
    """Deterministic provider returning canned responses; for tests/demo."""

    def __init__(self, responses: list[str] | str):
        if isinstance(responses, str):
            responses = [responses]
        self._responses = list(responses)
        self._i = 0
        self.calls: list[tuple[str, str]] = []

    def complete(self, system: str, user: str) -> str:
        self.calls.append((system, user))
        resp = self._responses[min(self._i, len(self._responses) - 1)]
        self._i += 1
        return resp

    def healthcheck(self) -> bool:
        return True
