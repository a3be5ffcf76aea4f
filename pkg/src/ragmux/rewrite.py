"""Knowledge-context query rewriting: five built-in strategies plus a
registry for custom ones.

Every strategy degrades to the original query on empty or failed LLM
output; a degraded query is strictly better than a failed turn.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Awaitable, Callable, Optional, Union

from . import prompts
from .config import StrategyConfig
from .errors import BackendUnavailable, EmptyKeywords
from .llm import ChatModel, ChatRequest, Embedder
from .store import VectorStore

RewriteOutput = Union[str, list[str]]

CustomRewriter = Callable[[str], Awaitable[str]]


class RewriteRegistry:
    """Custom strategies register by name at engine construction."""

    def __init__(self) -> None:
        self._rewriters: dict[str, CustomRewriter] = {}

    def register(self, name: str, fn: CustomRewriter) -> None:
        self._rewriters[name] = fn

    def get(self, name: str) -> CustomRewriter:
        if name not in self._rewriters:
            raise KeyError(f"no custom rewrite strategy registered as {name!r}")
        return self._rewriters[name]


@dataclass
class RewriteDeps:
    """Everything a chain may need: the LLM, and for retrieval rewrites the
    agent's store plus the engine embedder."""

    llm: ChatModel
    embedder: Optional[Embedder] = None
    store: Optional[VectorStore] = None
    registry: RewriteRegistry = field(default_factory=RewriteRegistry)
    hybrid_alpha: float = 0.5


async def _chat(llm: ChatModel, prompt: str) -> str:
    return await llm.chat(ChatRequest.from_prompt(prompt))


async def prompt_rewrite(query: str, strategy: StrategyConfig, llm: ChatModel) -> str:
    out = await _chat(llm, prompts.fill(strategy.template, query=query))
    return out.strip() or query


async def retrieval_rewrite(
    query: str,
    strategy: StrategyConfig,
    store: VectorStore,
    llm: ChatModel,
    embedder: Embedder,
    alpha: float = 0.5,
) -> str:
    """Retrieve with the original query first, then rewrite with that
    context filled into the template."""
    qvec = embedder.embed([query])[0]
    hits = store.hybrid_search(query, qvec, strategy.n_context_chunks, alpha)
    context = "\n\n".join(chunk.text for chunk, _ in hits)
    out = await _chat(llm, prompts.fill(strategy.template, query=query, context=context))
    return out.strip() or query


def parse_keywords(text: str) -> list[str]:
    """Split on commas/newlines, trim, drop empties, dedup case-insensitively
    preserving first-seen order."""
    parts = [p.strip() for chunk in text.split("\n") for p in chunk.split(",")]
    seen: set[str] = set()
    out: list[str] = []
    for part in parts:
        if not part:
            continue
        lowered = part.lower()
        if lowered in seen:
            continue
        seen.add(lowered)
        out.append(part)
    return out


async def keyword_rewrite(query: str, strategy: StrategyConfig, llm: ChatModel) -> list[str]:
    out = await _chat(llm, prompts.fill(strategy.template, query=query))
    keywords = parse_keywords(out)
    if not keywords:
        raise EmptyKeywords(f"no keywords parsed from {out!r}")
    return keywords


async def hyde_rewrite(query: str, strategy: StrategyConfig, llm: ChatModel) -> str:
    # The hypothetical answer paragraph becomes the new query verbatim.
    out = await _chat(llm, prompts.fill(strategy.template, query=query))
    return out.strip() or query


async def translation_rewrite(query: str, strategy: StrategyConfig, llm: ChatModel) -> str:
    if strategy.source_language and strategy.source_language == strategy.target_language:
        return query
    out = await _chat(
        llm,
        prompts.fill(strategy.template, query=query, target_language=strategy.target_language or ""),
    )
    return out.strip() or query


async def apply_strategy(query: str, strategy: StrategyConfig, deps: RewriteDeps) -> RewriteOutput:
    if strategy.kind == "prompt":
        return await prompt_rewrite(query, strategy, deps.llm)
    if strategy.kind == "retrieval":
        if deps.store is None or deps.embedder is None:
            raise ValueError("retrieval rewrite requires a store and an embedder")
        return await retrieval_rewrite(
            query, strategy, deps.store, deps.llm, deps.embedder, deps.hybrid_alpha
        )
    if strategy.kind == "keyword":
        return await keyword_rewrite(query, strategy, deps.llm)
    if strategy.kind == "hyde":
        return await hyde_rewrite(query, strategy, deps.llm)
    if strategy.kind == "translation":
        return await translation_rewrite(query, strategy, deps.llm)
    if strategy.kind == "custom":
        fn = deps.registry.get(strategy.name or "")
        out = await fn(query)
        return out.strip() or query
    raise ValueError(f"unknown strategy kind: {strategy.kind!r}")


async def apply_chain(
    query: str, strategies: list[StrategyConfig] | tuple[StrategyConfig, ...], deps: RewriteDeps
) -> RewriteOutput:
    """Apply strategies left to right, each consuming the previous output.

    An empty chain is the identity. Only a terminal keyword step may
    produce a list; config validation enforces that shape.
    """
    current: RewriteOutput = query
    for strategy in strategies:
        if isinstance(current, list):
            raise ValueError("keyword rewrite must be the terminal step of a chain")
        try:
            current = await apply_strategy(current, strategy, deps)
        except (EmptyKeywords,):
            raise
        except BackendUnavailable:
            # Degrade to the incoming query for this step.
            continue
    return current
