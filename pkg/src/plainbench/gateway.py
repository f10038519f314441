"""Chat-completions gateway: live HTTP backend, deterministic mock backend,
retry with jittered exponential backoff, and a JSONL transcript log.

Wire protocol (request: model, messages[], temperature; response: first
choice's message content) is the common hosted chat-completions shape; the
endpoint URL is configurable.  Credentials come only from an environment
variable, never from config files.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol

import httpx

API_KEY_ENV = "PLAINBENCH_API_KEY"

DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_RETRIES = 5
DEFAULT_TIMEOUT = 60.0
DEFAULT_MAX_CONCURRENCY = 4

BACKOFF_INITIAL = 1.0
BACKOFF_FACTOR = 2.0
BACKOFF_JITTER = 0.2
BACKOFF_CAP = 30.0

_ROLES = ("system", "user", "assistant")


class GatewayError(Exception):
    """Base class for gateway failures."""


class AuthenticationError(GatewayError):
    """Bad or missing credentials; never retried."""


class TransientError(GatewayError):
    """Rate limit, 5xx or timeout; retried with backoff."""


class RetriesExhaustedError(GatewayError):
    def __init__(self, attempts: int, last: Exception):
        super().__init__(f"gave up after {attempts} attempts: {last}")
        self.attempts = attempts
        self.last = last


class MalformedResponseError(GatewayError):
    """Provider reply did not contain a first-choice message content."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")

    def to_wire(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = DEFAULT_TEMPERATURE
    max_retries: int = DEFAULT_MAX_RETRIES
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if not self.model:
            raise ValueError("model identifier must be non-empty")
        if not self.messages:
            raise ValueError("messages must be non-empty")
        system_positions = [i for i, m in enumerate(self.messages)
                            if m.role == "system"]
        if system_positions and system_positions != [0]:
            raise ValueError("at most one system message, and it must come first")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def to_wire(self) -> dict:
        return {
            "model": self.model,
            "messages": [m.to_wire() for m in self.messages],
            "temperature": self.temperature,
        }


@dataclass(frozen=True)
class ChatResponse:
    content: str
    retry_count: int
    latency_ms: float
    usage: dict | None = None


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> tuple[str, dict | None]:
        """Return (assistant content, usage metadata or None)."""


class MockBackend:
    """Deterministic backend: a pure function of the full message list.

    The reply function receives the tuple of ChatMessage and returns the
    assistant content.  No state, no network.
    """

    def __init__(self, reply: Callable[[tuple[ChatMessage, ...]], str]):
        self._reply = reply

    def complete(self, request: ChatRequest) -> tuple[str, dict | None]:
        return self._reply(request.messages), None


class HTTPBackend:
    """Talks to any chat-completions-compatible endpoint."""

    def __init__(self, base_url: str, api_key_env: str = API_KEY_ENV,
                 client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self._client = client or httpx.Client()

    def complete(self, request: ChatRequest) -> tuple[str, dict | None]:
        api_key = os.environ.get(self.api_key_env)
        if not api_key:
            raise AuthenticationError(
                f"no credential in environment variable {self.api_key_env}")
        try:
            resp = self._client.post(
                f"{self.base_url}/chat/completions",
                json=request.to_wire(),
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=request.timeout,
            )
        except httpx.TimeoutException as exc:
            raise TransientError(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransientError(f"transport failure: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthenticationError(f"provider rejected credentials "
                                      f"(HTTP {resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise MalformedResponseError(f"cannot read reply content: {exc}") from exc
        if not isinstance(content, str):
            raise MalformedResponseError("reply content is not a string")
        return content, body.get("usage")


def backoff_delays(max_retries: int, rng: random.Random,
                   initial: float = BACKOFF_INITIAL, factor: float = BACKOFF_FACTOR,
                   jitter: float = BACKOFF_JITTER, cap: float = BACKOFF_CAP):
    """Yield the retry delay schedule: exponential growth with +/-jitter,
    capped, and clamped so successive delays never decrease.
    """
    base = initial
    previous = 0.0
    for _ in range(max_retries):
        jittered = min(cap, base) * (1.0 + rng.uniform(-jitter, jitter))
        delay = max(previous, min(cap, jittered))
        previous = delay
        yield delay
        base *= factor


class ChatGateway:
    """Dispatches chat requests with retry, concurrency bound and transcript.

    A semaphore bounds in-flight requests; transcript appends are serialized
    by a lock so the log is one well-formed JSON object per line, in
    completion order.
    """

    def __init__(self, backend: Backend, transcript_path: str | Path | None = None,
                 max_concurrency: int = DEFAULT_MAX_CONCURRENCY,
                 sleeper: Callable[[float], None] = time.sleep,
                 rng: random.Random | None = None):
        if max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        self._backend = backend
        self._transcript_path = Path(transcript_path) if transcript_path else None
        self._semaphore = threading.BoundedSemaphore(max_concurrency)
        self._sleep = sleeper
        self._rng = rng or random.Random()
        self._log_lock = threading.Lock()
        self.call_count = 0

    def chat(self, request: ChatRequest) -> ChatResponse:
        with self._semaphore:
            return self._chat_locked(request)

    def _chat_locked(self, request: ChatRequest) -> ChatResponse:
        start = time.monotonic()
        delays = backoff_delays(request.max_retries, self._rng)
        retries = 0
        last_error: Exception | None = None
        while True:
            try:
                content, usage = self._backend.complete(request)
            except TransientError as exc:
                last_error = exc
                if retries >= request.max_retries:
                    error = RetriesExhaustedError(retries + 1, exc)
                    self._append_transcript(request, None, retries, start,
                                            error=str(error))
                    raise error from exc
                retries += 1
                self._sleep(next(delays))
                continue
            except GatewayError as exc:
                self._append_transcript(request, None, retries, start,
                                        error=str(exc))
                raise
            latency_ms = (time.monotonic() - start) * 1000.0
            self._append_transcript(request, content, retries, start)
            return ChatResponse(content=content, retry_count=retries,
                                latency_ms=latency_ms, usage=usage)

    def _append_transcript(self, request: ChatRequest, content: str | None,
                           retries: int, start: float, error: str | None = None):
        with self._log_lock:
            self.call_count += 1
            if self._transcript_path is None:
                return
            entry = {
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "request": request.to_wire(),
                "response": content,
                "retries": retries,
                "latency_ms": round((time.monotonic() - start) * 1000.0, 3),
            }
            if error is not None:
                entry["error"] = error
            with open(self._transcript_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry, ensure_ascii=False) + "\n")


def read_transcript(path: str | Path) -> list[dict]:
    entries = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                entries.append(json.loads(line))
    return entries
