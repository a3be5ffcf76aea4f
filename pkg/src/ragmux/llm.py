"""Chat-completion and embedding gateways.

Two chat backends share one interface: a deterministic scripted mock that
makes the whole engine testable offline, and an HTTP client speaking an
OpenAI-style chat-completions wire format. The test embedder hashes tokens
into buckets (64-bit FNV-1a) and l2-normalizes the counts, which gives a
deterministic, order-insensitive cosine geometry.
"""

from __future__ import annotations

import asyncio
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import AsyncIterator, Optional, Protocol

import numpy as np

from .errors import BackendUnavailable, EmbeddingFailed, StreamInterrupted, Timeout

ENV_BASE_URL = "RAGMUX_BASE_URL"
ENV_API_KEY = "RAGMUX_API_KEY"

FNV_OFFSET_64 = 0xCBF29CE484222325
FNV_PRIME_64 = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]  # (role, content)
    temperature: float = 0.0
    max_tokens: int = 1024
    stream: bool = False

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("ChatRequest requires at least one message")

    @classmethod
    def from_prompt(cls, prompt: str, system: Optional[str] = None, **kw) -> "ChatRequest":
        msgs: list[tuple[str, str]] = []
        if system:
            msgs.append(("system", system))
        msgs.append(("user", prompt))
        return cls(messages=tuple(msgs), **kw)

    def joined(self) -> str:
        return "\n".join(content for _, content in self.messages)


@dataclass(frozen=True)
class CallRecord:
    prompt: str
    response: str
    model: str


class CallLog:
    """Records every gateway call; lets tests count and inspect prompts."""

    def __init__(self) -> None:
        self.calls: list[CallRecord] = []

    def record(self, prompt: str, response: str, model: str) -> None:
        self.calls.append(CallRecord(prompt, response, model))

    def __len__(self) -> int:
        return len(self.calls)


class ChatModel(Protocol):
    async def chat(self, request: ChatRequest) -> str: ...

    def chat_stream(self, request: ChatRequest) -> AsyncIterator[str]: ...


@dataclass(frozen=True)
class MockRule:
    pattern: str  # substring matched against the concatenated prompt
    response: str
    latency_ms: int = 0
    fail_after_tokens: Optional[int] = None  # simulate a broken stream
    error: Optional[str] = None  # "unavailable" raises BackendUnavailable


@dataclass(frozen=True)
class MockScript:
    rules: tuple[MockRule, ...] = ()
    default_response: str = ""
    default_latency_ms: int = 0

    def match(self, prompt: str) -> MockRule:
        for rule in self.rules:
            if rule.pattern in prompt:
                return rule
        return MockRule("", self.default_response, self.default_latency_ms)

    @classmethod
    def from_file(cls, path: str | Path) -> "MockScript":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = tuple(
            MockRule(
                pattern=r["pattern"],
                response=r.get("response", ""),
                latency_ms=int(r.get("latency_ms", 0)),
                fail_after_tokens=r.get("fail_after_tokens"),
                error=r.get("error"),
            )
            for r in raw.get("rules", [])
        )
        return cls(
            rules=rules,
            default_response=raw.get("default_response", ""),
            default_latency_ms=int(raw.get("default_latency_ms", 0)),
        )


def split_stream_tokens(text: str) -> list[str]:
    """Chunk a completion at whitespace boundaries; concatenation of the
    chunks reproduces the text exactly."""
    tokens = re.findall(r"\s*\S+\s*", text)
    if not tokens and text:
        return [text]
    return tokens


class MockChatModel:
    """Scripted chat backend: first matching rule wins, after its latency."""

    def __init__(self, script: MockScript, model: str = "mock", log: Optional[CallLog] = None):
        self.script = script
        self.model = model
        self.log = log if log is not None else CallLog()

    async def chat(self, request: ChatRequest) -> str:
        prompt = request.joined()
        rule = self.script.match(prompt)
        if rule.latency_ms:
            await asyncio.sleep(rule.latency_ms / 1000.0)
        if rule.error == "unavailable":
            self.log.record(prompt, "<unavailable>", self.model)
            raise BackendUnavailable(f"mock rule {rule.pattern!r}")
        self.log.record(prompt, rule.response, self.model)
        return rule.response

    async def chat_stream(self, request: ChatRequest) -> AsyncIterator[str]:
        prompt = request.joined()
        rule = self.script.match(prompt)
        if rule.latency_ms:
            await asyncio.sleep(rule.latency_ms / 1000.0)
        if rule.error == "unavailable":
            self.log.record(prompt, "<unavailable>", self.model)
            raise BackendUnavailable(f"mock rule {rule.pattern!r}")
        self.log.record(prompt, rule.response, self.model)
        emitted: list[str] = []
        for i, token in enumerate(split_stream_tokens(rule.response)):
            if rule.fail_after_tokens is not None and i >= rule.fail_after_tokens:
                raise StreamInterrupted("".join(emitted))
            emitted.append(token)
            yield token


class HttpChatModel:
    """OpenAI-style chat-completions client, configured via environment."""

    def __init__(
        self,
        model: str,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout_s: float = 60.0,
        log: Optional[CallLog] = None,
    ):
        self.model = model
        self.base_url = base_url or os.environ.get(ENV_BASE_URL, "")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        self.timeout_s = timeout_s
        self.log = log if log is not None else CallLog()

    def _check(self) -> None:
        if not self.base_url:
            raise BackendUnavailable(f"{ENV_BASE_URL} is not set")

    def _payload(self, request: ChatRequest, stream: bool) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stream": stream,
        }

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    async def chat(self, request: ChatRequest) -> str:
        import httpx

        self._check()
        url = self.base_url.rstrip("/") + "/chat/completions"
        try:
            async with httpx.AsyncClient(timeout=self.timeout_s) as client:
                resp = await client.post(url, json=self._payload(request, False), headers=self._headers())
                resp.raise_for_status()
        except httpx.TimeoutException as exc:
            raise Timeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(str(exc)) from exc
        text = resp.json()["choices"][0]["message"]["content"] or ""
        self.log.record(request.joined(), text, self.model)
        return text

    async def chat_stream(self, request: ChatRequest) -> AsyncIterator[str]:
        import httpx

        self._check()
        url = self.base_url.rstrip("/") + "/chat/completions"
        emitted: list[str] = []
        try:
            async with httpx.AsyncClient(timeout=self.timeout_s) as client:
                async with client.stream(
                    "POST", url, json=self._payload(request, True), headers=self._headers()
                ) as resp:
                    resp.raise_for_status()
                    async for line in resp.aiter_lines():
                        if not line.startswith("data:"):
                            continue
                        data = line[len("data:"):].strip()
                        if data == "[DONE]":
                            break
                        delta = json.loads(data)["choices"][0].get("delta", {})
                        token = delta.get("content")
                        if token:
                            emitted.append(token)
                            yield token
        except httpx.HTTPError as exc:
            if emitted:
                raise StreamInterrupted("".join(emitted), str(exc)) from exc
            raise BackendUnavailable(str(exc)) from exc
        self.log.record(request.joined(), "".join(emitted), self.model)


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET_64
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME_64) & _U64
    return h


_TOKEN_SPLIT = re.compile(r"[^0-9a-zA-Z]+")


def hash_tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


class Embedder(Protocol):
    dim: int
    embedder_id: str

    def embed(self, texts: list[str]) -> list[np.ndarray]: ...

    async def aembed(self, texts: list[str]) -> list[np.ndarray]: ...


@dataclass
class HashEmbedder:
    """Bag-of-hashed-tokens embedder: deterministic, order-insensitive.

    latency_ms simulates a remote embedding call in the async path; the
    synchronous path (ingestion) never sleeps.
    """

    dim: int = 64
    latency_ms: int = 0
    calls: list[list[str]] = field(default_factory=list)

    @property
    def embedder_id(self) -> str:
        return f"fnv1a-bag-{self.dim}"

    def embed_one(self, text: str) -> np.ndarray:
        tokens = hash_tokenize(text)
        if not tokens:
            raise EmbeddingFailed(f"no tokens to embed in {text!r}")
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            vec[fnv1a_64(token.encode("utf-8")) % self.dim] += 1.0
        return vec / np.linalg.norm(vec)

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            raise EmbeddingFailed("no texts to embed")
        self.calls.append(list(texts))
        return [self.embed_one(t) for t in texts]

    async def aembed(self, texts: list[str]) -> list[np.ndarray]:
        if self.latency_ms:
            await asyncio.sleep(self.latency_ms / 1000.0)
        return self.embed(texts)


def build_chat_models(llm_cfg, log: Optional[CallLog] = None) -> tuple[ChatModel, ChatModel]:
    """Build (main, context) chat models from an LlmConfig."""
    log = log if log is not None else CallLog()
    if llm_cfg.backend == "mock":
        script = MockScript.from_file(llm_cfg.mock_script) if llm_cfg.mock_script else MockScript()
        main = MockChatModel(script, model=llm_cfg.model, log=log)
        if llm_cfg.context_model == llm_cfg.model:
            return main, main
        return main, MockChatModel(script, model=llm_cfg.context_model, log=log)
    main = HttpChatModel(llm_cfg.model, timeout_s=llm_cfg.request_timeout_s, log=log)
    if llm_cfg.context_model == llm_cfg.model:
        return main, main
    ctx = HttpChatModel(llm_cfg.context_model, timeout_s=llm_cfg.request_timeout_s, log=log)
    return main, ctx
