"""Provider-agnostic chat-completion client with usage accounting and rate limiting.

One wire abstraction (system + user message in, one text reply out) covers
every backend; adapters map the thinking flag onto whatever the vendor offers
or drop it with a warning. Credentials come from environment variables only.
The scriptable mock provider makes every other module testable offline.
"""

from __future__ import annotations

import json
import logging
import math
import os
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean, pstdev

from .errors import AuthError, GatewayError, RateLimitError, TransportError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    system_prompt: str
    user_prompt: str
    thinking: bool = False
    max_output_tokens: int = 1024


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int
    tokens_estimated: bool = False
    rate_limit_waits: int = 0


@dataclass(frozen=True)
class ProviderReply:
    """Raw provider output; ``None`` token counts trigger estimation."""

    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_ms: int | None = None


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


# ---------------------------------------------------------------------------
# Usage ledger


@dataclass(frozen=True)
class LedgerEntry:
    model: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int
    estimated: bool = False
    rate_limit_waits: int = 0


class UsageLedger:
    """Append-only usage log; aggregation is order-invariant."""

    def __init__(self):
        self._entries: list[LedgerEntry] = []
        self._lock = threading.Lock()

    def record(
        self,
        model: str,
        prompt_tokens: int,
        completion_tokens: int,
        latency_ms: int,
        estimated: bool = False,
        rate_limit_waits: int = 0,
    ) -> None:
        entry = LedgerEntry(model, prompt_tokens, completion_tokens, latency_ms, estimated, rate_limit_waits)
        with self._lock:
            self._entries.append(entry)

    def entries(self, model: str | None = None) -> list[LedgerEntry]:
        with self._lock:
            snapshot = list(self._entries)
        if model is None:
            return snapshot
        return [e for e in snapshot if e.model == model]

    def summary(self, model: str | None = None) -> dict:
        entries = self.entries(model)
        latencies = [e.latency_ms for e in entries]
        return {
            "calls": len(entries),
            "prompt_tokens": sum(e.prompt_tokens for e in entries),
            "completion_tokens": sum(e.completion_tokens for e in entries),
            "total_tokens": sum(e.prompt_tokens + e.completion_tokens for e in entries),
            "latency_mean_ms": fmean(latencies) if latencies else 0.0,
            "latency_std_ms": pstdev(latencies) if latencies else 0.0,
            "rate_limit_waits": sum(e.rate_limit_waits for e in entries),
        }

    def totals_by_model(self) -> dict[str, dict]:
        out: dict[str, dict] = {}
        for entry in self.entries():
            out.setdefault(entry.model, {"calls": 0, "prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0})
            bucket = out[entry.model]
            bucket["calls"] += 1
            bucket["prompt_tokens"] += entry.prompt_tokens
            bucket["completion_tokens"] += entry.completion_tokens
            bucket["total_tokens"] += entry.prompt_tokens + entry.completion_tokens
        return out


# ---------------------------------------------------------------------------
# Rate limiting


class RateLimiter:
    """Sliding-window admission: at most ``max_requests`` per ``window_s``.

    Clock and sleep are injectable so the no-overrun property can be checked
    against a virtual clock.
    """

    def __init__(self, max_requests: int, window_s: float, clock=time.monotonic, sleep=time.sleep):
        self.max_requests = max_requests
        self.window_s = window_s
        self._clock = clock
        self._sleep = sleep
        self._admitted: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            while True:
                now = self._clock()
                while self._admitted and self._admitted[0] <= now - self.window_s:
                    self._admitted.popleft()
                if len(self._admitted) < self.max_requests:
                    self._admitted.append(now)
                    return
                self._sleep(self._admitted[0] + self.window_s - now)


# ---------------------------------------------------------------------------
# Providers


class MockProvider:
    """Replies from a script, consumed in order; entries may be errors.

    Script entries: a plain string, ``{"text": ..., "prompt_tokens"?,
    "completion_tokens"?, "latency_ms"?}``, or ``{"error": "rate_limit" |
    "transport" | "auth", "retry_after"?}``.
    """

    kind = "mock"

    def __init__(self, replies: list, models: list[str] | None = None, name: str = "mock", cycle: bool = False):
        self.name = name
        self.replies = list(replies)
        self.models = list(models) if models else None  # None serves any model
        self.cycle = cycle
        self.calls: list[CompletionRequest] = []
        self._index = 0
        self._lock = threading.Lock()

    @classmethod
    def from_script_file(cls, path: str | Path, **kwargs) -> "MockProvider":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh), **kwargs)

    def serves(self, model: str) -> bool:
        return self.models is None or model in self.models

    def complete(self, request: CompletionRequest) -> ProviderReply:
        with self._lock:
            self.calls.append(request)
            if self._index >= len(self.replies):
                if not self.cycle or not self.replies:
                    raise TransportError("mock script exhausted")
                self._index = 0
            reply = self.replies[self._index]
            self._index += 1
        if isinstance(reply, str):
            return ProviderReply(text=reply, latency_ms=0)
        error = reply.get("error")
        if error == "rate_limit":
            raise RateLimitError(retry_after=reply.get("retry_after"))
        if error == "transport":
            raise TransportError(reply.get("message", "scripted transport error"))
        if error == "auth":
            raise AuthError(reply.get("message", "scripted auth error"))
        return ProviderReply(
            text=reply.get("text", ""),
            prompt_tokens=reply.get("prompt_tokens"),
            completion_tokens=reply.get("completion_tokens"),
            latency_ms=reply.get("latency_ms", 0),
        )


class OpenAICompatProvider:
    """Adapter for chat-completion endpoints speaking the common JSON dialect."""

    kind = "openai-compat"

    def __init__(
        self,
        name: str,
        endpoint: str,
        model_map: dict[str, str],
        credential_env: str,
        thinking_payload: dict | None = None,
        timeout_s: float = 120.0,
    ):
        self.name = name
        self.endpoint = endpoint
        self.model_map = dict(model_map)
        self.credential_env = credential_env
        self.thinking_payload = thinking_payload or {}
        self.timeout_s = timeout_s

    def serves(self, model: str) -> bool:
        return model in self.model_map

    def complete(self, request: CompletionRequest) -> ProviderReply:
        import httpx

        credential = os.environ.get(self.credential_env)
        if not credential:
            raise AuthError(f"environment variable {self.credential_env} is not set")
        body = {
            "model": self.model_map[request.model],
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "max_tokens": request.max_output_tokens,
        }
        key = "on" if request.thinking else "off"
        if key in self.thinking_payload:
            body.update(self.thinking_payload[key])
        elif request.thinking:
            logger.warning("provider %s has no thinking mapping; flag dropped", self.name)
        try:
            response = httpx.post(
                self.endpoint,
                json=body,
                headers={"Authorization": f"Bearer {credential}"},
                timeout=self.timeout_s,
            )
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code in (401, 403):
            raise AuthError(f"HTTP {response.status_code}")
        if response.status_code == 429:
            retry_after = response.headers.get("retry-after")
            raise RateLimitError(retry_after=float(retry_after) if retry_after else None)
        if response.status_code >= 400:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        data = response.json()
        usage = data.get("usage") or {}
        return ProviderReply(
            text=data["choices"][0]["message"]["content"],
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )


# ---------------------------------------------------------------------------
# Gateway


class Gateway:
    """Routes requests to providers, meters usage, and absorbs rate limits."""

    def __init__(
        self,
        providers: list,
        ledger: UsageLedger | None = None,
        limits: dict[str, dict] | None = None,
        clock=time.monotonic,
        sleep=time.sleep,
        rate_limit_retries: int = 5,
    ):
        self.providers = list(providers)
        self.ledger = ledger or UsageLedger()
        self._clock = clock
        self._sleep = sleep
        self.rate_limit_retries = rate_limit_retries
        self._limiters: dict[str, RateLimiter] = {}
        for provider in self.providers:
            cfg = (limits or {}).get(provider.name)
            if cfg:
                self._limiters[provider.name] = RateLimiter(
                    cfg["requests"], cfg["window_s"], clock=clock, sleep=sleep
                )

    def provider_for(self, model: str):
        for provider in self.providers:
            if provider.serves(model):
                return provider
        raise GatewayError(f"no provider serves model {model!r}")

    def complete(self, request: CompletionRequest) -> CompletionResult:
        if not request.system_prompt or not request.user_prompt:
            raise GatewayError("prompts must be non-empty")
        if request.max_output_tokens <= 0:
            raise GatewayError("max_output_tokens must be positive")
        provider = self.provider_for(request.model)
        limiter = self._limiters.get(provider.name)

        waits = 0
        attempts = 0
        while True:
            if limiter is not None:
                limiter.acquire()
            started = self._clock()
            try:
                reply = provider.complete(request)
            except RateLimitError as exc:
                attempts += 1
                if attempts > self.rate_limit_retries:
                    raise
                waits += 1
                self._sleep(exc.retry_after if exc.retry_after is not None else 1.0)
                continue
            elapsed_ms = max(0, int((self._clock() - started) * 1000))
            break

        latency_ms = reply.latency_ms if reply.latency_ms is not None else elapsed_ms
        estimated = reply.prompt_tokens is None or reply.completion_tokens is None
        prompt_tokens = (
            reply.prompt_tokens
            if reply.prompt_tokens is not None
            else estimate_tokens(request.system_prompt + request.user_prompt)
        )
        completion_tokens = (
            reply.completion_tokens
            if reply.completion_tokens is not None
            else estimate_tokens(reply.text)
        )
        self.ledger.record(
            model=request.model,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_ms=latency_ms,
            estimated=estimated,
            rate_limit_waits=waits,
        )
        return CompletionResult(
            text=reply.text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_ms=latency_ms,
            tokens_estimated=estimated,
            rate_limit_waits=waits,
        )


def build_provider(cfg: dict, base_dir: Path | None = None):
    kind = cfg.get("kind")
    if kind == "mock":
        script = cfg.get("script", [])
        if isinstance(script, str):
            path = Path(script)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            with open(path, "r", encoding="utf-8") as fh:
                script = json.load(fh)
        return MockProvider(
            replies=script,
            models=cfg.get("models"),
            name=cfg.get("name", "mock"),
            cycle=cfg.get("cycle", False),
        )
    if kind == "openai-compat":
        return OpenAICompatProvider(
            name=cfg["name"],
            endpoint=cfg["endpoint"],
            model_map=cfg["model_map"],
            credential_env=cfg["credential_env"],
            thinking_payload=cfg.get("thinking_payload"),
            timeout_s=cfg.get("timeout_s", 120.0),
        )
    raise GatewayError(f"unknown provider kind {kind!r}")


def load_gateway(
    config: dict | str | Path,
    ledger: UsageLedger | None = None,
    clock=time.monotonic,
    sleep=time.sleep,
) -> Gateway:
    """Build a gateway from a config document or file path (never from secrets)."""
    base_dir = None
    if isinstance(config, (str, Path)):
        base_dir = Path(config).parent
        with open(config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    providers_cfg = config.get("providers", [])
    providers = [build_provider(cfg, base_dir) for cfg in providers_cfg]
    limits = {
        cfg.get("name", "mock"): cfg["rate_limit"]
        for cfg in providers_cfg
        if cfg.get("rate_limit")
    }
    return Gateway(providers, ledger=ledger, limits=limits, clock=clock, sleep=sleep)
