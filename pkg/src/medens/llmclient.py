"""Completion backends: a remote HTTP backend speaking an OpenAI-style
completions protocol, deterministic offline backends for tests and demos,
and a retry wrapper.

Configuration comes from the environment: MEDENS_API_KEY, MEDENS_API_BASE
(default https://api.openai.com/v1), MEDENS_MODEL. Responses are read from
choices[0].text.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol

import requests

from .errors import BackendError, HttpError, ProtocolError, RateLimited, Timeout
from .prompt import DEFAULT_CONFIG, PromptConfig

DEFAULT_API_BASE = "https://api.openai.com/v1"

# Backend knobs used for every summarization call (response cap in tokens,
# sampling temperature, both penalties zero).
DEFAULT_MAX_TOKENS = 128
DEFAULT_TEMPERATURE = 0.6


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    stop: tuple[str, ...]
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    presence_penalty: float = 0.0
    frequency_penalty: float = 0.0

    def __post_init__(self):
        if not self.stop:
            raise ValueError("stop sequences must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


def wire_body(request: CompletionRequest, model: str) -> str:
    """Stable request serialization; field order is part of the contract."""
    return json.dumps(
        {
            "model": model,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "presence_penalty": request.presence_penalty,
            "frequency_penalty": request.frequency_penalty,
            "stop": list(request.stop),
        },
        ensure_ascii=False,
    )


class CompletionBackend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...
    def backend_id(self) -> str: ...


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


class MockBackend:
    """Replays scripted responses per prompt digest, in order, then falls
    back to the default response. Fully deterministic; thread-safe."""

    def __init__(
        self,
        script: dict[str, list[str]] | None = None,
        default_response: str = "",
        backend_name: str = "mock",
    ):
        self._script = {k: list(v) for k, v in (script or {}).items()}
        self._counts: dict[str, int] = {}
        self._lock = threading.Lock()
        self.default_response = default_response
        self._name = backend_name
        self.calls = 0

    @classmethod
    def scripted(cls, by_prompt: dict[str, list[str]], **kwargs) -> "MockBackend":
        """Convenience constructor keyed by full prompt text."""
        return cls({prompt_digest(p): rs for p, rs in by_prompt.items()}, **kwargs)

    def complete(self, request: CompletionRequest) -> str:
        digest = prompt_digest(request.prompt)
        with self._lock:
            self.calls += 1
            idx = self._counts.get(digest, 0)
            self._counts[digest] = idx + 1
        responses = self._script.get(digest, ())
        return responses[idx] if idx < len(responses) else self.default_response

    def backend_id(self) -> str:
        return self._name


class EchoBackend:
    """Offline demo backend: answers with the target snippet's own text
    (separators collapsed to spaces), which trivially covers every concept
    the recognizer finds in the snippet. Deterministic."""

    def __init__(self, config: PromptConfig = DEFAULT_CONFIG):
        self.config = config

    def complete(self, request: CompletionRequest) -> str:
        tail = request.prompt.rsplit(self.config.stop_token, 1)[-1]
        if tail.endswith(self.config.summarize_token):
            tail = tail[: -len(self.config.summarize_token)]
        parts = [p.strip() for p in tail.split(self.config.sep_token)]
        return " ".join(p for p in parts if p) + self.config.stop_token

    def backend_id(self) -> str:
        return "echo"


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    api_key: str
    model: str
    timeout: float = 30.0
    max_concurrency: int = 4

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "EndpointConfig":
        env = dict(os.environ) if env is None else env
        key = env.get("MEDENS_API_KEY", "")
        if not key:
            raise ValueError("MEDENS_API_KEY is not set")
        return cls(
            base_url=env.get("MEDENS_API_BASE", DEFAULT_API_BASE),
            api_key=key,
            model=env.get("MEDENS_MODEL", ""),
        )


def http_complete(
    request: CompletionRequest,
    config: EndpointConfig,
    session: requests.Session | None = None,
) -> str:
    """POST {base}/completions and return the first choice's text verbatim."""
    url = config.base_url.rstrip("/") + "/completions"
    body = wire_body(request, config.model)
    headers = {
        "Authorization": f"Bearer {config.api_key}",
        "Content-Type": "application/json",
    }
    post = session.post if session is not None else requests.post
    try:
        resp = post(url, data=body.encode("utf-8"), headers=headers, timeout=config.timeout)
    except requests.Timeout as exc:
        raise Timeout(after=config.timeout) from exc
    except requests.RequestException as exc:
        raise ProtocolError(f"transport failure: {exc}") from exc
    if resp.status_code == 429:
        retry_after = resp.headers.get("Retry-After")
        raise RateLimited(float(retry_after) if retry_after else None)
    if resp.status_code != 200:
        raise HttpError(resp.status_code, resp.text)
    try:
        payload = resp.json()
    except ValueError as exc:
        raise ProtocolError("response body is not JSON") from exc
    choices = payload.get("choices")
    if not isinstance(choices, list) or not choices:
        raise ProtocolError("missing or empty 'choices'")
    text = choices[0].get("text")
    if not isinstance(text, str):
        raise ProtocolError("choices[0] has no 'text'")
    return text


class HttpBackend:
    """CompletionBackend over http_complete with a concurrency cap."""

    def __init__(self, config: EndpointConfig):
        self.config = config
        self._session = requests.Session()
        self._sem = threading.BoundedSemaphore(config.max_concurrency)

    def complete(self, request: CompletionRequest) -> str:
        with self._sem:
            return http_complete(request, self.config, self._session)

    def backend_id(self) -> str:
        return f"http:{self.config.model or 'default'}"


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 0.5  # seconds; doubles each attempt
    jitter: float = 0.1        # uniform multiplicative jitter fraction

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def _retryable(exc: BackendError) -> bool:
    if isinstance(exc, (Timeout, RateLimited)):
        return True
    return isinstance(exc, HttpError) and 500 <= exc.status < 600


class RetryingBackend:
    def __init__(
        self,
        inner: CompletionBackend,
        policy: RetryPolicy = RetryPolicy(),
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.inner = inner
        self.policy = policy
        self._sleep = sleep
        self._rng = rng or random.Random()

    def complete(self, request: CompletionRequest) -> str:
        for attempt in range(1, self.policy.max_attempts + 1):
            try:
                return self.inner.complete(request)
            except BackendError as exc:
                if not _retryable(exc) or attempt == self.policy.max_attempts:
                    exc.attempts = attempt
                    raise
                delay = self.policy.base_backoff * (2 ** (attempt - 1))
                delay *= 1 + self._rng.uniform(0, self.policy.jitter)
                self._sleep(delay)
        raise AssertionError("unreachable")

    def backend_id(self) -> str:
        return self.inner.backend_id()


def with_retries(backend: CompletionBackend, policy: RetryPolicy = RetryPolicy(), **kwargs) -> RetryingBackend:
    return RetryingBackend(backend, policy, **kwargs)
