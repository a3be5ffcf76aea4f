"""Final answer generation: rerank-filter to a chunk budget, stream the
answer, then look back for citations.

Citation generation is two-stage on purpose: the answer streams to the
user first, and only afterwards is the model asked which of the presented
fragments it actually used. Per-source retrieval scores are ignored here;
scores from different sources (and different rewritten queries) are not
comparable, so everything is re-scored by one reranker.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from math import sqrt
from typing import AsyncIterator, Optional, Protocol, Union

from . import prompts
from .agents import RetrievalBundle
from .context import ContextAnalysis, format_history
from .errors import BackendUnavailable
from .llm import ChatModel, ChatRequest, hash_tokenize
from .model import ConversationHistory, KnowledgeChunk


@dataclass(frozen=True)
class Citation:
    source_uri: str
    source_name: str
    chunk_ids: tuple[str, ...]
    display_index: int

    def to_dict(self) -> dict:
        return {
            "source_uri": self.source_uri,
            "source_name": self.source_name,
            "chunk_ids": list(self.chunk_ids),
            "display_index": self.display_index,
        }


@dataclass(frozen=True)
class RerankedContext:
    entries: tuple[tuple[KnowledgeChunk, float], ...]  # scores non-increasing
    dropped: int
    total_chars: int

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def chunks(self) -> list[KnowledgeChunk]:
        return [c for c, _ in self.entries]


class Reranker(Protocol):
    def score(self, query: str, texts: list[str]) -> list[float]: ...


class TfCosineReranker:
    """Deterministic fallback: cosine between term-frequency vectors."""

    def score(self, query: str, texts: list[str]) -> list[float]:
        q = Counter(hash_tokenize(query))
        qnorm = sqrt(sum(v * v for v in q.values()))
        out = []
        for text in texts:
            t = Counter(hash_tokenize(text))
            tnorm = sqrt(sum(v * v for v in t.values()))
            if qnorm == 0 or tnorm == 0:
                out.append(0.0)
                continue
            dot = sum(q[term] * t[term] for term in q)
            out.append(dot / (qnorm * tnorm))
        return out


class HttpReranker:
    """Cross-encoder endpoint: POST {query, texts} -> {scores: [...]}."""

    def __init__(self, endpoint: str, timeout_s: float = 30.0):
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def score(self, query: str, texts: list[str]) -> list[float]:
        import httpx

        resp = httpx.post(
            self.endpoint, json={"query": query, "texts": texts}, timeout=self.timeout_s
        )
        resp.raise_for_status()
        return [float(s) for s in resp.json()["scores"]]


def _digest_pseudo_chunk(bundle: RetrievalBundle) -> KnowledgeChunk:
    # A digest is presented as one pseudo-chunk with agent-level provenance.
    return KnowledgeChunk(
        chunk_id=f"{bundle.agent_id}:digest",
        text=bundle.digested_summary or "",
        embedding=None,
        source_uri=f"agent:{bundle.agent_id}/digest",
        source_kind="vdb",
        source_name=bundle.agent_id,
    )


def rerank(
    query: str,
    bundles: list[RetrievalBundle],
    chunk_budget: int,
    reranker: Optional[Reranker] = None,
) -> RerankedContext:
    """Pool every bundle's items (digests as pseudo-chunks), re-score with
    the reranker, and keep the top chunk_budget. Ties break by ascending
    chunk_id; an empty pool yields an empty context."""
    if chunk_budget < 1:
        raise ValueError("chunk_budget must be >= 1")
    reranker = reranker or TfCosineReranker()
    pool: list[KnowledgeChunk] = []
    for bundle in bundles:
        if bundle.digested_summary is not None:
            pool.append(_digest_pseudo_chunk(bundle))
        else:
            pool.extend(bundle.items)
    if not pool:
        return RerankedContext(entries=(), dropped=0, total_chars=0)
    scores = reranker.score(query, [c.text for c in pool])
    order = sorted(range(len(pool)), key=lambda i: (-scores[i], pool[i].chunk_id))
    kept = order[:chunk_budget]
    entries = tuple((pool[i], float(scores[i])) for i in kept)
    return RerankedContext(
        entries=entries,
        dropped=len(pool) - len(kept),
        total_chars=sum(len(pool[i].text) for i in kept),
    )


def _numbered_chunks(context: RerankedContext, char_cap: int) -> str:
    lines = []
    for i, (chunk, _) in enumerate(context.entries, start=1):
        lines.append(f"[{i}] (source: {chunk.source_uri})\n{chunk.text[:char_cap]}")
    return "\n\n".join(lines)


def build_answer_prompt(
    query: str,
    analysis: Optional[ContextAnalysis],
    history: Optional[ConversationHistory],
    context: RerankedContext,
    char_cap: int = 2000,
) -> ChatRequest:
    """Deterministic prompt assembly for the first (streamed) stage.

    With the context manager on, the distilled analysis plus its related
    messages stand in for the history; with it off, the raw history is
    included verbatim.
    """
    if analysis is not None:
        related = "\n".join(f"{m.index}: {m.role}: {m.content}" for m in analysis.related_messages)
        context_block = (
            "Conversation analysis: " + (analysis.analysis or "(none)") + "\n"
            "Related messages:\n" + (related or "(none)")
        )
    elif history is not None and len(history):
        context_block = "Conversation history:\n" + format_history(history)
    else:
        context_block = "Conversation history: (none)"

    if len(context):
        knowledge_block = "Knowledge fragments:\n" + _numbered_chunks(context, char_cap)
    else:
        knowledge_block = prompts.ANSWER_NO_KNOWLEDGE

    user = prompts.fill(
        prompts.ANSWER_USER,
        context_block=context_block,
        knowledge_block=knowledge_block,
        query=query,
    )
    return ChatRequest.from_prompt(user, system=prompts.ANSWER_SYSTEM, stream=True)


async def generate_answer_stream(
    query: str,
    analysis: Optional[ContextAnalysis],
    history: Optional[ConversationHistory],
    context: RerankedContext,
    llm: ChatModel,
    char_cap: int = 2000,
) -> AsyncIterator[str]:
    request = build_answer_prompt(query, analysis, history, context, char_cap)
    async for token in llm.chat_stream(request):
        yield token


_INT = re.compile(r"\d+")


def parse_citation_numbers(text: str, n_chunks: int) -> list[int]:
    """Chunk numbers actually used, in first-use order, filtered to [1..n].

    Accepts a JSON-style array or bare numbers in prose; anything else
    parses to an empty list (the answer stands uncited).
    """
    seen: set[int] = set()
    out: list[int] = []
    for match in _INT.finditer(text):
        num = int(match.group())
        if 1 <= num <= n_chunks and num not in seen:
            seen.add(num)
            out.append(num)
    return out


def map_citations(numbers: list[int], context: RerankedContext) -> list[Citation]:
    """Group used chunks by source_uri (dedup), preserving first-use order."""
    by_uri: dict[str, list[str]] = {}
    names: dict[str, str] = {}
    order: list[str] = []
    for num in numbers:
        chunk = context.entries[num - 1][0]
        if chunk.source_uri not in by_uri:
            by_uri[chunk.source_uri] = []
            names[chunk.source_uri] = chunk.source_name
            order.append(chunk.source_uri)
        if chunk.chunk_id not in by_uri[chunk.source_uri]:
            by_uri[chunk.source_uri].append(chunk.chunk_id)
    return [
        Citation(
            source_uri=uri,
            source_name=names[uri],
            chunk_ids=tuple(by_uri[uri]),
            display_index=i,
        )
        for i, uri in enumerate(order, start=1)
    ]


async def generate_citations(
    answer: str, context: RerankedContext, llm: ChatModel, char_cap: int = 2000
) -> list[Citation]:
    """Second stage of the look-back strategy; never raises.

    Runs strictly after the answer stream completes. Unparseable or
    unavailable output produces an empty citation list.
    """
    if not answer or not len(context):
        return []
    prompt = prompts.fill(
        prompts.CITATION,
        items=_numbered_chunks(context, char_cap),
        answer=answer,
    )
    try:
        out = await llm.chat(ChatRequest.from_prompt(prompt))
    except BackendUnavailable:
        return []
    numbers = parse_citation_numbers(out, len(context))
    return map_citations(numbers, context)
