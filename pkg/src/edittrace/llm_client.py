"""Minimal chat-completion client with transport retries, plus a scripted mock.

The wire format is the common JSON chat shape:
request  {"messages": [{"role": ..., "content": ...}, ...], "temperature": t, "max_tokens": n}
response {"choices": [{"message": {"content": ...}}]}
"""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import requests

logger = logging.getLogger(__name__)

ENV_URL = "EDITTRACE_LLM_URL"
ENV_KEY = "EDITTRACE_LLM_KEY"


class ClientError(Exception):
    """Base class for chat-completion client failures."""


class ClientTimeout(ClientError):
    """Transport never produced a response (timeout or connection failure)."""


class ClientHttpError(ClientError):
    def __init__(self, status: int, message: str = ""):
        super().__init__(message or f"HTTP status {status}")
        self.status = status


class MalformedResponseError(ClientError):
    """The server replied but not with a parseable chat completion."""


class ScriptExhaustedError(ClientError):
    """A mock client ran out of scripted replies."""


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    temperature: float = 0.7
    max_tokens: int = 256

    def __post_init__(self) -> None:
        if not self.user:
            raise ValueError("user message must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class ClientConfig:
    endpoint_url: str
    api_key: str = ""
    timeout: float = 30.0
    transport_retries: int = 2
    backoff_base: float = 1.0

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.transport_retries < 0:
            raise ValueError("transport_retries must be >= 0")

    @classmethod
    def from_env(cls, **overrides) -> "ClientConfig":
        url = os.environ.get(ENV_URL, "")
        if not url:
            raise ValueError(f"{ENV_URL} is not set")
        return cls(endpoint_url=url, api_key=os.environ.get(ENV_KEY, ""), **overrides)


class LlmClient(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


class HttpLlmClient:
    """Chat-completion client over HTTP with exponential-backoff retries.

    Timeouts, connection failures, and 5xx statuses are retried up to
    ``transport_retries`` times; 4xx statuses and malformed bodies raise
    immediately. Safe to share across worker threads.
    """

    def __init__(
        self,
        config: ClientConfig,
        post: Callable | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.config = config
        self._post = post or requests.post
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._lock = threading.Lock()
        self._calls = 0

    @property
    def call_count(self) -> int:
        with self._lock:
            return self._calls

    def complete(self, request: ChatRequest) -> str:
        with self._lock:
            self._calls += 1
        cfg = self.config
        payload = {
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"

        attempts = cfg.transport_retries + 1
        last_error: ClientError = ClientTimeout("no attempt made")
        for attempt in range(attempts):
            try:
                response = self._post(
                    cfg.endpoint_url, json=payload, headers=headers, timeout=cfg.timeout
                )
            except requests.Timeout as exc:
                last_error = ClientTimeout(f"request timed out after {cfg.timeout}s")
                logger.warning("attempt %d/%d timed out: %s", attempt + 1, attempts, exc)
            except requests.ConnectionError as exc:
                last_error = ClientTimeout(f"connection failed: {exc}")
                logger.warning("attempt %d/%d connection error", attempt + 1, attempts)
            else:
                status = response.status_code
                if status >= 500:
                    last_error = ClientHttpError(status)
                    logger.warning("attempt %d/%d got status %d", attempt + 1, attempts, status)
                elif status >= 400:
                    raise ClientHttpError(status)
                else:
                    return self._extract(response)
            if attempt + 1 < attempts:
                delay = cfg.backoff_base * (2 ** attempt) * (1.0 + 0.1 * self._rng.random())
                self._sleep(delay)
        raise last_error

    @staticmethod
    def _extract(response) -> str:
        try:
            body = response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"response body is not JSON: {exc}") from exc
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError("response missing choices[0].message.content") from exc
        if not isinstance(content, str):
            raise MalformedResponseError("message content is not a string")
        return content


class MockLlmClient:
    """Deterministic scripted client for tests and offline pipeline runs.

    Successive ``complete`` calls return the scripted replies in order, then
    raise ScriptExhaustedError. Records call count and the last request.
    """

    def __init__(self, script: Sequence[str]):
        self._script = list(script)
        self._lock = threading.Lock()
        self.call_count = 0
        self.last_request: ChatRequest | None = None

    def complete(self, request: ChatRequest) -> str:
        with self._lock:
            self.call_count += 1
            self.last_request = request
            if self.call_count > len(self._script):
                raise ScriptExhaustedError(
                    f"mock script exhausted after {len(self._script)} replies"
                )
            return self._script[self.call_count - 1]


def mock_client(script: Sequence[str]) -> MockLlmClient:
    return MockLlmClient(script)
