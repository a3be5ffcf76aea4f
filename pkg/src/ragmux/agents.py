"""Retrieval agents: one rewrite chain plus one or more knowledge sources,
returning provenance-tagged bundles (raw chunks or an LLM digest)."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import prompts
from .clients import FixtureSearchClient, HttpApiClient, LiveSearchClient, search_results_to_chunks
from .config import AgentConfig, SourceConfig
from .errors import EmptyKeywords
from .llm import ChatModel, ChatRequest, Embedder
from .model import KnowledgeChunk
from .rewrite import RewriteDeps, apply_chain
from .store import VectorStore

log = logging.getLogger(__name__)

SearchClient = Union[FixtureSearchClient, LiveSearchClient]


@dataclass(frozen=True)
class RetrievalBundle:
    """Per-agent retrieval output; raw items and a digest are exclusive."""

    agent_id: str
    items: tuple[KnowledgeChunk, ...] = ()
    retrieval_scores: tuple[Optional[float], ...] = ()  # None for engine-ranked items
    rewritten_query: Union[str, tuple[str, ...]] = ""
    digested_summary: Optional[str] = None
    supporting_ids: tuple[str, ...] = ()
    error_notes: tuple[str, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.items and self.digested_summary is None


@dataclass
class SourceBinding:
    config: SourceConfig
    store: Optional[VectorStore] = None
    search_client: Optional[SearchClient] = None
    http_client: Optional[HttpApiClient] = None


@dataclass
class RetrievalAgent:
    config: AgentConfig
    bindings: list[SourceBinding]
    llm: ChatModel
    embedder: Embedder
    deps: RewriteDeps = field(init=False)

    def __post_init__(self) -> None:
        primary_store = next((b.store for b in self.bindings if b.store is not None), None)
        self.deps = RewriteDeps(
            llm=self.llm, embedder=self.embedder, store=primary_store
        )

    @property
    def agent_id(self) -> str:
        return self.config.id

    async def rewrite(self, enriched_query: str) -> Union[str, list[str]]:
        """Run the chain; an unparseable keyword step falls back to the
        whitespace tokens of the query."""
        try:
            return await apply_chain(enriched_query, self.config.rewrite, self.deps)
        except EmptyKeywords:
            return enriched_query.split()

    async def retrieve(self, enriched_query: str, n_per_source: int) -> RetrievalBundle:
        """Rewrite once, then query every source; partial failures become
        error notes rather than a failed bundle."""
        rewritten = await self.rewrite(enriched_query)
        items: list[KnowledgeChunk] = []
        scores: list[Optional[float]] = []
        notes: list[str] = []
        for binding in self.bindings:
            try:
                got = self._query_source(binding, rewritten, n_per_source)
            except Exception as exc:
                notes.append(f"{binding.config.id}: {type(exc).__name__}: {exc}")
                continue
            for chunk, score in got:
                items.append(chunk)
                scores.append(score)
        return RetrievalBundle(
            agent_id=self.agent_id,
            items=tuple(items),
            retrieval_scores=tuple(scores),
            rewritten_query=tuple(rewritten) if isinstance(rewritten, list) else rewritten,
            error_notes=tuple(notes),
        )

    def _query_source(
        self, binding: SourceBinding, rewritten: Union[str, list[str]], n: int
    ) -> list[tuple[KnowledgeChunk, Optional[float]]]:
        cfg = binding.config
        as_text = " ".join(rewritten) if isinstance(rewritten, list) else rewritten
        if cfg.kind == "vdb":
            assert binding.store is not None
            try:
                qvec = self.embedder.embed([as_text])[0]
            except Exception:
                qvec = None
            hits = binding.store.hybrid_search(as_text, qvec, n)
            return [(chunk, score) for chunk, score in hits]
        if cfg.kind == "search_engine":
            assert binding.search_client is not None
            keywords = list(rewritten) if isinstance(rewritten, list) else rewritten.split()
            results = binding.search_client.search(keywords, n)
            return [(c, None) for c in search_results_to_chunks(results, cfg.id, "search_engine")]
        if cfg.kind == "http_api":
            assert binding.http_client is not None
            params = {key: prompts.fill(value, query=as_text) for key, value in cfg.params.items()}
            results = binding.http_client.query(params, n)
            return [(c, None) for c in search_results_to_chunks(results, cfg.id, "http_api")]
        raise ValueError(f"unknown source kind {cfg.kind!r}")

    async def digest(self, bundle: RetrievalBundle, query: str) -> RetrievalBundle:
        """LLM-compress raw items into a summary citing supporting ids.

        Identity when digest mode is off or there is nothing to digest;
        any parse problem degrades to the raw bundle.
        """
        if not self.config.digest or not bundle.items:
            return bundle
        numbered = "\n".join(f"[{c.chunk_id}] {c.text}" for c in bundle.items)
        prompt = prompts.fill(prompts.DIGEST, query=query, items=numbered)
        try:
            out = await self.llm.chat(ChatRequest.from_prompt(prompt))
        except Exception:
            return bundle
        parsed = _parse_digest(out)
        if parsed is None:
            return bundle
        summary, raw_ids = parsed
        known = {c.chunk_id for c in bundle.items}
        supporting = tuple(cid for cid in raw_ids if cid in known)
        if not summary or not supporting:
            return bundle
        return replace(
            bundle,
            items=(),
            retrieval_scores=(),
            digested_summary=summary,
            supporting_ids=supporting,
        )


def _parse_digest(text: str) -> Optional[tuple[str, list[str]]]:
    start = text.find("{")
    end = text.rfind("}")
    if start == -1 or end <= start:
        return None
    try:
        payload = json.loads(text[start : end + 1])
    except json.JSONDecodeError:
        return None
    if not isinstance(payload, dict):
        return None
    summary = payload.get("summary", "")
    ids = payload.get("supporting_ids", [])
    if not isinstance(summary, str) or not isinstance(ids, list):
        return None
    return summary, [str(i) for i in ids]
