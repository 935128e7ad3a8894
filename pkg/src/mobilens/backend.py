"""Chat-completion backends behind one `complete(request) -> text` surface.

Three implementations:
  * HttpBackend    - speaks the OpenAI-compatible `/v1/chat/completions`
                     wire protocol with retry/backoff on transport and 5xx.
  * CacheBackend   - record/replay wrapper keyed by content-hash request ids;
                     `replay_strict` never touches the wrapped backend.
  * MockBackend    - deterministic rule-based oracle (see mock.py).
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Protocol

import httpx

CACHE_MODES = ("off", "record", "replay", "replay_strict")


class BackendError(RuntimeError):
    """Completion failed after exhausting the retry policy."""


class CacheMissError(BackendError):
    """Strict replay found no cached response for a request id."""


@dataclass(frozen=True)
class CompletionRequest:
    """One chat-completion call; `request_id` is a pure function of content."""

    model: str
    messages: tuple[tuple[str, str], ...]  # (role, content) pairs, in order
    temperature: float = 0.0
    max_tokens: int = 1024

    @property
    def request_id(self) -> str:
        payload = json.dumps(
            {
                "model": self.model,
                "messages": [{"role": r, "content": c} for r, c in self.messages],
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_wire(self) -> dict:
        """The JSON body for POST /v1/chat/completions."""
        return {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    @property
    def last_user_content(self) -> str:
        for role, content in reversed(self.messages):
            if role == "user":
                return content
        raise ValueError("request has no user message")


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_base_s: float = 0.5  # sleep backoff_base_s * 2**attempt between tries


@dataclass(frozen=True)
class BackendConfig:
    """Connection, decoding, and caching settings for a model endpoint.

    The auth token is read from the environment variable named by
    `auth_env`; secrets never live in config files. Decoding defaults to
    temperature 0 so runs are as deterministic as the server allows.
    """

    endpoint: str = "http://localhost:8000/v1/chat/completions"
    auth_env: str = "MOBILENS_API_TOKEN"
    model: str = "local-model"
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout_s: float = 60.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    parallelism: int = 1
    cache_mode: str = "off"
    cache_path: str | None = None

    def __post_init__(self) -> None:
        if self.cache_mode not in CACHE_MODES:
            raise ValueError(f"cache_mode must be one of {CACHE_MODES}, got {self.cache_mode!r}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    @staticmethod
    def load(path: str | Path) -> "BackendConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        retry = RetryPolicy(**raw.pop("retry", {}))
        return BackendConfig(retry=retry, **raw)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


class HttpBackend:
    """Live client for any OpenAI-compatible chat-completion server.

    Retries transport failures and 5xx responses per the retry policy;
    anything else (including well-formed but unhelpful model output) is
    surfaced untouched - malformed content is the parser's concern.
    """

    def __init__(self, config: BackendConfig, client: httpx.Client | None = None):
        self.config = config
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(config.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = client or httpx.Client(timeout=config.timeout_s, headers=headers)
        self.attempts_made = 0

    def complete(self, request: CompletionRequest) -> str:
        policy = self.config.retry
        last_error: Exception | None = None
        for attempt in range(policy.max_attempts):
            self.attempts_made += 1
            try:
                response = self._client.post(self.config.endpoint, json=request.to_wire())
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if response.status_code >= 500:
                    last_error = BackendError(
                        f"server error {response.status_code}: {response.text[:200]}"
                    )
                elif response.status_code >= 400:
                    raise BackendError(
                        f"request rejected ({response.status_code}): {response.text[:200]}"
                    )
                else:
                    try:
                        return response.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, ValueError) as exc:
                        raise BackendError(f"malformed completion payload: {exc}") from exc
            if attempt + 1 < policy.max_attempts:
                time.sleep(policy.backoff_base_s * (2**attempt))
        raise BackendError(
            f"completion failed after {policy.max_attempts} attempts: {last_error}"
        ) from last_error

    def close(self) -> None:
        self._client.close()


class CacheBackend:
    """Record/replay cache keyed by request_id, one JSON line per call.

    Modes:
      record        - serve hits from the file, call through and append on miss
      replay        - serve hits, fall through to the wrapped backend on miss
      replay_strict - serve hits, raise CacheMissError on miss (no network, ever)
    """

    def __init__(self, path: str | Path, mode: str, inner: Backend | None = None):
        if mode not in ("record", "replay", "replay_strict"):
            raise ValueError(f"cache mode must be record/replay/replay_strict, got {mode!r}")
        self.path = Path(path)
        self.mode = mode
        self.inner = inner
        self._lock = threading.Lock()
        self._responses: dict[str, str] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        entry = json.loads(line)
                        self._responses[entry["request_id"]] = entry["response"]
        elif mode in ("replay", "replay_strict"):
            raise FileNotFoundError(f"replay cache {self.path} does not exist")

    def __len__(self) -> int:
        return len(self._responses)

    def complete(self, request: CompletionRequest) -> str:
        rid = request.request_id
        with self._lock:
            if rid in self._responses:
                return self._responses[rid]
        if self.mode == "replay_strict":
            raise CacheMissError(f"no cached response for request {rid}")
        if self.inner is None:
            raise BackendError("cache miss and no wrapped backend configured")
        response = self.inner.complete(request)
        if self.mode == "record":
            entry = {
                "request_id": rid,
                "request": request.to_wire(),
                "response": response,
                "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
            }
            with self._lock:
                self._responses[rid] = response
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return response


def wrap_with_cache(backend: Backend | None, config: BackendConfig) -> Backend:
    """Apply the config's cache mode around a base backend."""
    if config.cache_mode == "off":
        if backend is None:
            raise ValueError("cache_mode=off requires a live backend")
        return backend
    if not config.cache_path:
        raise ValueError(f"cache_mode={config.cache_mode} requires cache_path")
    return CacheBackend(config.cache_path, config.cache_mode, inner=backend)
