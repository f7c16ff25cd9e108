"""Uniform client for external chat-completions endpoints.

One Gateway fronts every endpoint: content-addressed disk cache, bounded
retries with exponential backoff, per-endpoint in-flight limits and token-bucket
rate limiting. A scripted mock transport stands in for real endpoints in tests
and offline runs.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import uuid
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Protocol

import requests

from .errors import (
    CacheCorrupt,
    EndpointUnreachable,
    HttpStatus,
    MockMiss,
    RetriesExhausted,
)

ENV_BASE_URL = "AF_LLM_BASE_URL"
ENV_API_KEY = "AF_LLM_API_KEY"
ENV_CACHE_DIR = "AF_CACHE_DIR"

# Defaults: judging and decomposition stay deterministic; generation gets diversity.
TEMPERATURE_JUDGE = 0.0
TEMPERATURE_GENERATION = 0.7


@dataclass(frozen=True)
class ChatRequest:
    endpoint_id: str
    model: str
    messages: tuple[dict[str, Any], ...]
    temperature: float = 0.0
    max_tokens: int = 512
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[-1].get("role") != "user":
            raise ValueError("last message must have role=user")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def rendered_prompt(self) -> str:
        """Flatten messages to text for mock matching and diagnostics."""
        parts = []
        for msg in self.messages:
            content = msg.get("content")
            if isinstance(content, str):
                parts.append(content)
            else:
                for piece in content or ():
                    if piece.get("type") == "text":
                        parts.append(piece.get("text", ""))
                    elif piece.get("type") == "image_url":
                        parts.append(f"[frame:{piece['image_url'].get('url', '')}]")
        return "\n".join(parts)

    def cache_key(self) -> str:
        payload = json.dumps(
            {
                "endpoint_id": self.endpoint_id,
                "model": self.model,
                "messages": self.messages,
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
                "seed": self.seed,
            },
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: float = 0.0
    cached: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }


def user_message(question: str, frame_uris: tuple[str, ...] = ()) -> dict[str, Any]:
    """Build a user message, attaching frames as image-URL content parts."""
    if not frame_uris:
        return {"role": "user", "content": question}
    content: list[dict[str, Any]] = [{"type": "text", "text": question}]
    content.extend(
        {"type": "image_url", "image_url": {"url": uri}} for uri in frame_uris
    )
    return {"role": "user", "content": content}


@dataclass(frozen=True)
class Endpoint:
    id: str
    base_url: str
    model: str
    api_key: str | None = None


class EndpointRegistry:
    """endpoint_id -> connection details, from a JSON file or environment."""

    def __init__(self, endpoints: dict[str, Endpoint]):
        self.endpoints = endpoints

    def get(self, endpoint_id: str) -> Endpoint:
        if endpoint_id not in self.endpoints:
            raise KeyError(f"endpoint {endpoint_id!r} not configured")
        return self.endpoints[endpoint_id]

    def model_for(self, endpoint_id: str, default: str = "mock") -> str:
        ep = self.endpoints.get(endpoint_id)
        return ep.model if ep else default

    @classmethod
    def load(cls, path: str | Path) -> "EndpointRegistry":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = raw.get("endpoints", raw)
        endpoints = {}
        for eid, entry in entries.items():
            auth = entry.get("auth")
            if isinstance(auth, dict) and "env" in auth:
                api_key = os.environ.get(auth["env"])
            else:
                api_key = auth or os.environ.get(ENV_API_KEY)
            endpoints[eid] = Endpoint(
                id=eid, base_url=entry["base_url"].rstrip("/"), model=entry["model"], api_key=api_key
            )
        return cls(endpoints)

    @classmethod
    def from_env(cls) -> "EndpointRegistry":
        base = os.environ.get(ENV_BASE_URL)
        if not base:
            return cls({})
        ep = Endpoint(
            id="default",
            base_url=base.rstrip("/"),
            model=os.environ.get("AF_LLM_MODEL", "default"),
            api_key=os.environ.get(ENV_API_KEY),
        )
        return cls({"default": ep})


class Transport(Protocol):
    def complete(self, req: ChatRequest) -> ChatResponse: ...


class HttpTransport:
    """POST /v1/chat/completions with bearer auth, retrying transient failures.

    Connection-level failures exhaust retries into EndpointUnreachable; 429/5xx
    exhaust into RetriesExhausted; other HTTP errors raise HttpStatus at once.
    """

    RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})

    def __init__(
        self,
        registry: EndpointRegistry,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 0.25,
        backoff_cap: float = 8.0,
        sleep: Callable[[float], None] = time.sleep,
        session: requests.Session | None = None,
    ):
        self.registry = registry
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.sleep = sleep
        self.session = session or requests.Session()

    def complete(self, req: ChatRequest) -> ChatResponse:
        ep = self.registry.get(req.endpoint_id)
        payload: dict[str, Any] = {
            "model": req.model,
            "messages": list(req.messages),
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        if req.seed is not None:
            payload["seed"] = req.seed
        headers = {"Content-Type": "application/json"}
        if ep.api_key:
            headers["Authorization"] = f"Bearer {ep.api_key}"

        url = f"{ep.base_url}/v1/chat/completions"
        last_exc: Exception | None = None
        last_status: tuple[int, str] | None = None
        start = time.monotonic()
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleep(min(self.backoff_base * 2 ** (attempt - 1), self.backoff_cap))
            try:
                resp = self.session.post(url, json=payload, headers=headers, timeout=self.timeout)
            except requests.RequestException as e:
                last_exc = e
                continue
            if resp.status_code == 200:
                body = resp.json()
                usage = body.get("usage", {})
                return ChatResponse(
                    text=body["choices"][0]["message"]["content"],
                    prompt_tokens=usage.get("prompt_tokens", 0),
                    completion_tokens=usage.get("completion_tokens", 0),
                    latency_ms=(time.monotonic() - start) * 1000.0,
                )
            if resp.status_code in self.RETRYABLE_STATUS:
                last_status = (resp.status_code, resp.text)
                continue
            raise HttpStatus(resp.status_code, resp.text)

        if last_status is not None:
            raise RetriesExhausted(
                f"gave up after {self.max_retries} retries; last status {last_status[0]}"
            )
        raise EndpointUnreachable(f"{url}: {last_exc}")


@dataclass(frozen=True)
class MockRule:
    match: str  # regex searched case-insensitively over the rendered prompt
    completion: str


class MockBackend:
    """Deterministic scripted transport: first matching playbook rule wins."""

    def __init__(self, playbook: list[MockRule]):
        self.playbook = playbook
        self._compiled = [
            (re.compile(rule.match, re.IGNORECASE | re.DOTALL), rule.completion)
            for rule in playbook
        ]

    def complete(self, req: ChatRequest) -> ChatResponse:
        prompt = req.rendered_prompt()
        for pattern, completion in self._compiled:
            if pattern.search(prompt):
                return ChatResponse(text=completion)
        raise MockMiss(prompt)

    # usable bare as a backend, without a Gateway in front
    chat = complete

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([MockRule(match=r["match"], completion=r["completion"]) for r in raw])


def mock_chat(req: ChatRequest, playbook: list[MockRule]) -> ChatResponse:
    return MockBackend(playbook).complete(req)


class _TokenBucket:
    def __init__(self, rate_per_s: float, capacity: float | None = None):
        self.rate = rate_per_s
        self.capacity = capacity if capacity is not None else max(1.0, rate_per_s)
        self.tokens = self.capacity
        self.updated = time.monotonic()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


@dataclass
class _EndpointLimits:
    in_flight: threading.BoundedSemaphore
    bucket: _TokenBucket | None


class Gateway:
    """Cache-fronted, rate-limited chat client shareable across worker threads."""

    def __init__(
        self,
        transport: Transport,
        cache_dir: str | Path | None = None,
        max_in_flight: int = 4,
        requests_per_second: float | None = None,
    ):
        self.transport = transport
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.max_in_flight = max_in_flight
        self.requests_per_second = requests_per_second
        self._limits: dict[str, _EndpointLimits] = {}
        self._limits_lock = threading.Lock()

    def _limit(self, endpoint_id: str) -> _EndpointLimits:
        with self._limits_lock:
            if endpoint_id not in self._limits:
                bucket = (
                    _TokenBucket(self.requests_per_second)
                    if self.requests_per_second
                    else None
                )
                self._limits[endpoint_id] = _EndpointLimits(
                    in_flight=threading.BoundedSemaphore(self.max_in_flight), bucket=bucket
                )
            return self._limits[endpoint_id]

    def _cache_path(self, key: str) -> Path | None:
        return self.cache_dir / key if self.cache_dir else None

    def _cache_read(self, key: str) -> ChatResponse | None:
        path = self._cache_path(key)
        if path is None or not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            stored = entry["response"]
            return ChatResponse(
                text=stored["text"],
                prompt_tokens=stored["prompt_tokens"],
                completion_tokens=stored["completion_tokens"],
                cached=True,
            )
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise CacheCorrupt(key) from e

    def _cache_write(self, key: str, req: ChatRequest, resp: ChatResponse) -> None:
        path = self._cache_path(key)
        if path is None:
            return
        entry = {
            "request": {
                "endpoint_id": req.endpoint_id,
                "model": req.model,
                "messages": list(req.messages),
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
                "seed": req.seed,
            },
            "response": resp.to_dict(),
        }
        # unique per write: concurrent identical requests must not share a temp file
        tmp = path.with_name(f".{path.name}.tmp{os.getpid()}.{uuid.uuid4().hex[:8]}")
        tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)  # atomic: readers never see a partial entry

    def chat(self, req: ChatRequest) -> ChatResponse:
        key = req.cache_key()
        hit = self._cache_read(key)
        if hit is not None:
            return hit
        limits = self._limit(req.endpoint_id)
        if limits.bucket is not None:
            limits.bucket.acquire()
        with limits.in_flight:
            resp = self.transport.complete(req)
        self._cache_write(key, req, resp)
        return resp

    def cache_stats(self) -> dict[str, int]:
        if not self.cache_dir or not self.cache_dir.exists():
            return {"entries": 0, "bytes": 0}
        files = [p for p in self.cache_dir.iterdir() if p.is_file() and not p.name.startswith(".")]
        return {"entries": len(files), "bytes": sum(p.stat().st_size for p in files)}

    def clear_cache(self) -> int:
        if not self.cache_dir or not self.cache_dir.exists():
            return 0
        n = 0
        for p in self.cache_dir.iterdir():
            if p.is_file():
                p.unlink()
                n += 1
        return n
