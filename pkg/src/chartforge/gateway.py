"""Chat-completion backend: OpenAI-compatible HTTP client plus a seeded offline mock.

The real client speaks a minimal subset of the chat-completions wire protocol
(documented in docs/gateway.md): POST {endpoint}/chat/completions with a
system+user message pair, response text read from the first choice. The mock
backend fabricates schema-valid stage output deterministically, so the whole
pipeline runs offline and reproducibly.
"""

from __future__ import annotations

import os
import random
import re
import threading
import time
from dataclasses import dataclass

import requests

from .util import stable_hash64

STAGE_MARKER_RE = re.compile(r"#stage:(topic|data|qa)\b")

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})
AUTH_STATUS = frozenset({401, 403})


class GatewayError(Exception):
    """Base class for gateway failures."""


class ConfigError(GatewayError):
    pass


class AuthError(GatewayError):
    """401/403 from the endpoint; never retried."""


class GatewayExhausted(GatewayError):
    """All retry attempts spent without a usable response."""


class TransientBackendError(GatewayError):
    """Retryable condition: transport failure, 429, or 5xx."""


@dataclass
class ChatRequest:
    system: str
    user: str
    temperature: float = 0.7
    max_tokens: int = 1024
    model: str = ""

    def __post_init__(self):
        if not self.user:
            raise ValueError("ChatRequest.user must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature out of range: {self.temperature}")
        if self.max_tokens <= 0:
            raise ValueError(f"max_tokens must be positive: {self.max_tokens}")


@dataclass
class ChatResponse:
    text: str
    backend_id: str
    latency_ms: int = 0


@dataclass
class GatewayConfig:
    mode: str = "mock"  # "real" | "mock"
    endpoint_url: str = ""
    api_key_env: str = "CHARTFORGE_API_KEY"
    model: str = ""
    max_retries: int = 3
    base_backoff_ms: int = 500
    max_concurrent_requests: int = 4
    mock_seed: int = 0

    def validate(self) -> None:
        if self.mode not in ("real", "mock"):
            raise ConfigError(f"unknown gateway mode {self.mode!r}")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.max_concurrent_requests < 1:
            raise ConfigError("max_concurrent_requests must be >= 1")
        if self.mode == "real":
            if not self.endpoint_url or not self.model:
                raise ConfigError("real mode requires endpoint_url and model")
            if not os.environ.get(self.api_key_env):
                raise ConfigError(
                    f"real mode requires the API key env var {self.api_key_env} to be set"
                )


def classify_prompt(req: ChatRequest) -> str:
    """Read the stage marker embedded by the stage prompt builders.

    Unknown or missing markers fall back to "data".
    """
    match = STAGE_MARKER_RE.search(req.system)
    return match.group(1) if match else "data"


class Gateway:
    """Shareable completion backend with a concurrency gate and retry policy.

    ``transport`` may be injected for tests: a callable (ChatRequest) -> str
    performing one request attempt. The default transport does a real HTTP
    round trip.
    """

    def __init__(self, config: GatewayConfig, transport=None, sleep=time.sleep):
        config.validate()
        self.config = config
        self._transport = transport
        self._sleep = sleep
        self._gate = threading.BoundedSemaphore(config.max_concurrent_requests)
        self._backoff_rng = random.Random(stable_hash64(config.mock_seed, "backoff"))

    def complete(self, req: ChatRequest) -> ChatResponse:
        """One completion; retries transport errors, 429 and 5xx with backoff.

        Raises AuthError on 401/403 (never retried) and GatewayExhausted once
        max_retries retries are spent.
        """
        start = time.monotonic()
        if self.config.mode == "mock":
            with self._gate:
                text = self._mock_text(req)
            return ChatResponse(
                text=text,
                backend_id="mock",
                latency_ms=int((time.monotonic() - start) * 1000),
            )

        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt > 0:
                self._sleep(self._backoff_seconds(attempt - 1))
            try:
                with self._gate:
                    text = (self._transport or self._http_transport)(req)
                return ChatResponse(
                    text=text,
                    backend_id=self.config.model or "real",
                    latency_ms=int((time.monotonic() - start) * 1000),
                )
            except AuthError:
                raise
            except (TransientBackendError, requests.RequestException) as exc:
                last_error = exc
        raise GatewayExhausted(
            f"gave up after {attempts} attempts: {last_error}"
        ) from last_error

    def _backoff_seconds(self, attempt: int) -> float:
        base = self.config.base_backoff_ms * (2**attempt)
        return base * self._backoff_rng.uniform(0.5, 1.5) / 1000.0

    def _mock_text(self, req: ChatRequest) -> str:
        from .mockllm import mock_response  # deferred: mockllm pulls in stage modules

        return mock_response(req, self.config.mock_seed)

    def _http_transport(self, req: ChatRequest) -> str:
        url = self.config.endpoint_url.rstrip("/") + "/chat/completions"
        key = os.environ.get(self.config.api_key_env, "")
        payload = {
            "model": req.model or self.config.model,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        response = requests.post(
            url,
            json=payload,
            headers={"Authorization": f"Bearer {key}"},
            timeout=120,
        )
        if response.status_code in AUTH_STATUS:
            raise AuthError(f"endpoint returned {response.status_code}")
        if response.status_code in RETRYABLE_STATUS:
            raise TransientBackendError(f"endpoint returned {response.status_code}")
        if response.status_code != 200:
            raise GatewayError(
                f"unexpected status {response.status_code}: {response.text[:200]}"
            )
        body = response.json()
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"malformed completion body: {body!r}") from exc


def complete(req: ChatRequest, cfg: GatewayConfig) -> ChatResponse:
    """One-shot convenience wrapper; long-lived callers should hold a Gateway."""
    return Gateway(cfg).complete(req)
