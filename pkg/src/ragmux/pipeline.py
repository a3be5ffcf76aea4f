"""Turn orchestration: two concurrent stages, then summarization.

Stage 1 runs the conversation-context rewrite and query routing in
parallel; routing therefore sees the embedding of the original query (the
two branches cannot depend on each other). Stage 2 runs every activated
agent's retrieval concurrently with the context analysis. A turn never
hard-fails on a single component: only total LLM unavailability during
answer generation surfaces as a failed turn.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, AsyncIterator, Callable, Optional

from .agents import RetrievalAgent, RetrievalBundle, SourceBinding
from .clients import FixtureSearchClient, HttpApiClient, LiveSearchClient
from .config import EngineConfig
from .context import ContextAnalysis, analyze_context, degraded_analysis, rewrite_for_retrieval
from .errors import BackendUnavailable, StreamInterrupted
from .ingest import IngestStats, ingest_with_cache, parse_mixin_blocks
from .llm import CallLog, ChatModel, Embedder, HashEmbedder, build_chat_models
from .model import ConversationHistory, Query, history_window
from .router import RoutingModel, build_routing_model, route, score_all
from .store import VectorStore
from .summarize import (
    Citation,
    HttpReranker,
    RerankedContext,
    Reranker,
    TfCosineReranker,
    generate_answer_stream,
    generate_citations,
    rerank,
)

log = logging.getLogger(__name__)


@dataclass
class Session:
    session_id: str
    history: ConversationHistory = field(default_factory=ConversationHistory)
    created_ms: int = 0
    updated_ms: int = 0


@dataclass
class TurnTrace:
    """Per-turn observability record; emitted as one structured log line."""

    turn_id: str
    query: str
    enriched_query: str
    activated_agents: list[str]
    agent_scores: Optional[dict[str, float]]
    rewritten_queries: dict[str, Any]
    chunk_counts: dict[str, int]
    presented_chunks: int
    dropped_chunks: int
    context_manager_enabled: bool
    routing_enabled: bool
    llm_calls: int
    error_notes: list[str]
    stage1_ms: float
    stage2_ms: float
    final_ms: float
    total_ms: float
    failed: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn_id": self.turn_id,
            "query": self.query,
            "enriched_query": self.enriched_query,
            "activated_agents": self.activated_agents,
            "agent_scores": self.agent_scores,
            "rewritten_queries": self.rewritten_queries,
            "chunk_counts": self.chunk_counts,
            "presented_chunks": self.presented_chunks,
            "dropped_chunks": self.dropped_chunks,
            "context_manager_enabled": self.context_manager_enabled,
            "routing_enabled": self.routing_enabled,
            "llm_calls": self.llm_calls,
            "error_notes": self.error_notes,
            "stage1_ms": self.stage1_ms,
            "stage2_ms": self.stage2_ms,
            "final_ms": self.final_ms,
            "total_ms": self.total_ms,
            "failed": self.failed,
        }


@dataclass
class TurnResult:
    answer: str
    citations: list[Citation]
    trace: Optional[TurnTrace]
    events: list[dict[str, Any]]


def _event(kind: str, data: dict[str, Any]) -> dict[str, Any]:
    return {"event": kind, "data": data}


class Engine:
    """A built engine: stores, clients, routing model, agents, summarizer."""

    def __init__(
        self,
        config: EngineConfig,
        *,
        chat_model: ChatModel,
        context_chat_model: Optional[ChatModel] = None,
        embedder: Embedder,
        stores: dict[str, VectorStore],
        agents: dict[str, RetrievalAgent],
        routing_model: Optional[RoutingModel],
        call_log: Optional[CallLog] = None,
        reranker: Optional[Reranker] = None,
        clock: Callable[[], float] = time.time,
        trace_path: Optional[str | Path] = None,
        ingest_stats: Optional[list[IngestStats]] = None,
    ):
        self.config = config
        self.llm = chat_model
        self.context_llm = context_chat_model or chat_model
        self.embedder = embedder
        self.stores = stores
        self.agents = agents
        self.routing_model = routing_model
        self.call_log = call_log
        self.reranker = reranker or TfCosineReranker()
        self.clock = clock
        self.trace_path = Path(trace_path) if trace_path else None
        self.ingest_stats = ingest_stats or []
        self._turn_counter = 0

    # ---- construction ----

    @classmethod
    def build(
        cls,
        config: EngineConfig,
        *,
        chat_model: Optional[ChatModel] = None,
        context_chat_model: Optional[ChatModel] = None,
        embedder: Optional[Embedder] = None,
        cache_dir: Optional[str | Path] = None,
        clock: Callable[[], float] = time.time,
        trace_path: Optional[str | Path] = None,
        custom_rewriters: Optional[dict[str, Any]] = None,
    ) -> "Engine":
        call_log = CallLog()
        if chat_model is None:
            chat_model, built_context = build_chat_models(config.llm, log=call_log)
            if context_chat_model is None:
                context_chat_model = built_context
        else:
            call_log = getattr(chat_model, "log", call_log)
        if embedder is None:
            embedder = HashEmbedder(dim=config.llm.embedding_dim)

        stores: dict[str, VectorStore] = {}
        stats: list[IngestStats] = []
        for source in config.knowledge_sources:
            if source.kind == "vdb":
                store, st = ingest_with_cache(source, embedder, cache_dir)
                stores[source.id] = store
                stats.append(st)

        agents: dict[str, RetrievalAgent] = {}
        for agent_cfg in config.agents:
            bindings: list[SourceBinding] = []
            for ref in agent_cfg.sources:
                source = config.source(ref)
                if source.kind == "vdb":
                    bindings.append(SourceBinding(source, store=stores[source.id]))
                elif source.kind == "search_engine":
                    client = (
                        FixtureSearchClient(source.fixture_dir, source.constraints)
                        if source.mode == "fixture"
                        else LiveSearchClient(source.constraints)
                    )
                    bindings.append(SourceBinding(source, search_client=client))
                else:
                    http_client = HttpApiClient(
                        endpoint_template=source.endpoint or "",
                        response_path=source.response_path or "",
                        field_map=source.field_map,
                        fixture_dir=source.fixture_dir if source.mode == "fixture" else None,
                    )
                    bindings.append(SourceBinding(source, http_client=http_client))
            agent = RetrievalAgent(agent_cfg, bindings, chat_model, embedder)
            if custom_rewriters:
                for name, fn in custom_rewriters.items():
                    agent.deps.registry.register(name, fn)
            agents[agent_cfg.id] = agent

        routing_model = None
        if config.router.enabled:
            specs = []
            for agent_cfg in config.agents:
                vdb_stores = [stores[s] for s in agent_cfg.sources if config.source(s).kind == "vdb"]
                merged = _merge_stores(vdb_stores) if vdb_stores else None
                mixin_texts = list(agent_cfg.mixin)
                if agent_cfg.mixin_file:
                    mixin_texts.extend(
                        parse_mixin_blocks(Path(agent_cfg.mixin_file).read_text(encoding="utf-8"))
                    )
                specs.append(
                    (
                        agent_cfg.id,
                        merged,
                        mixin_texts,
                        agent_cfg.mixin_weight,
                        agent_cfg.scale,
                        agent_cfg.clusters,
                    )
                )
            routing_model = build_routing_model(specs, embedder, config.router.seed)

        reranker: Reranker
        if config.summarizer.reranker == "http" and config.summarizer.rerank_endpoint:
            reranker = HttpReranker(config.summarizer.rerank_endpoint)
        else:
            reranker = TfCosineReranker()

        return cls(
            config,
            chat_model=chat_model,
            context_chat_model=context_chat_model,
            embedder=embedder,
            stores=stores,
            agents=agents,
            routing_model=routing_model,
            call_log=call_log,
            reranker=reranker,
            clock=clock,
            trace_path=trace_path,
            ingest_stats=stats,
        )

    def rebuild(self, cache_dir: Optional[str | Path] = None) -> list[IngestStats]:
        """Re-ingest offline sources and rebuild the routing model."""
        fresh = Engine.build(
            self.config,
            chat_model=self.llm,
            context_chat_model=self.context_llm,
            embedder=self.embedder,
            cache_dir=cache_dir,
            clock=self.clock,
        )
        self.stores = fresh.stores
        self.agents = fresh.agents
        self.routing_model = fresh.routing_model
        self.ingest_stats = fresh.ingest_stats
        return fresh.ingest_stats

    # ---- observability ----

    def source_stats(self) -> list[dict[str, Any]]:
        out = []
        for source in self.config.knowledge_sources:
            chunks = len(self.stores[source.id]) if source.id in self.stores else 0
            out.append({"name": source.id, "kind": source.kind, "chunks": chunks})
        return out

    def route_debug(self, query: str) -> dict[str, Any]:
        """Per-agent scores and the activation list, read-only."""
        all_ids = sorted(self.agents)
        if not self.config.router.enabled or self.routing_model is None:
            return {"scores": None, "activated": all_ids, "routing_enabled": False}
        qvec = self.embedder.embed([query])[0]
        scores = score_all(qvec, self.routing_model)
        activated = route(qvec, self.routing_model, self.config.router.k, self.config.router.min_score)
        return {
            "scores": {aid: float(scores[aid]) for aid in sorted(scores)},
            "activated": activated,
            "routing_enabled": True,
        }

    def _emit_trace(self, trace: TurnTrace) -> None:
        record = json.dumps(trace.to_dict(), sort_keys=True)
        log.info("turn trace %s", record)
        if self.trace_path:
            with self.trace_path.open("a", encoding="utf-8") as fh:
                fh.write(record + "\n")

    # ---- the turn ----

    async def run_turn(self, session: Session, user_text: str) -> AsyncIterator[dict[str, Any]]:
        """Run one turn, yielding meta / token / citations / error / done
        events in protocol order. History grows by exactly two messages on
        success and none on failure."""
        t_start = self.clock()
        self._turn_counter += 1
        turn_id = f"{session.session_id}:{self._turn_counter}"
        calls_before = len(self.call_log) if self.call_log is not None else 0
        manager_on = self.config.pipeline.context_manager
        routing_on = self.config.router.enabled and self.routing_model is not None
        history = history_window(session.history, self.config.pipeline.history_max_chars)
        notes: list[str] = []

        # Stage 1: conversation-context rewrite || routing on the original query.
        async def branch_enrich() -> str:
            if not manager_on:
                return user_text
            return await rewrite_for_retrieval(user_text, history, self.context_llm)

        async def branch_route() -> tuple[list[str], Optional[dict[str, float]]]:
            if not routing_on:
                return sorted(self.agents), None
            try:
                qvec = (await self.embedder.aembed([user_text]))[0]
            except Exception as exc:
                notes.append(f"routing: {type(exc).__name__}: {exc}; activating all agents")
                return sorted(self.agents), None
            scores = score_all(qvec, self.routing_model)
            activated = route(
                qvec, self.routing_model, self.config.router.k, self.config.router.min_score
            )
            return activated, scores

        enriched, (activated, scores) = await asyncio.gather(branch_enrich(), branch_route())
        query = Query(
            original=user_text,
            enriched=None if (not enriched or enriched == user_text) else enriched,
        )
        t_stage1 = self.clock()

        yield _event("meta", {"session_id": session.session_id, "turn_id": turn_id,
                              "agents": list(activated)})

        # Stage 2: per-agent retrieval || context analysis.
        timeout_s = self.config.pipeline.agent_timeout_s

        async def agent_branch(agent: RetrievalAgent) -> RetrievalBundle:
            try:
                bundle = await asyncio.wait_for(
                    agent.retrieve(query.effective, self.config.pipeline.n_per_source), timeout_s
                )
                return await asyncio.wait_for(agent.digest(bundle, query.effective), timeout_s)
            except asyncio.TimeoutError:
                return RetrievalBundle(agent_id=agent.agent_id, error_notes=("timeout",))
            except Exception as exc:
                return RetrievalBundle(
                    agent_id=agent.agent_id,
                    error_notes=(f"{type(exc).__name__}: {exc}",),
                )

        async def analysis_branch() -> Optional[ContextAnalysis]:
            if not manager_on:
                return None
            if not len(history):
                return degraded_analysis(history)
            return await analyze_context(user_text, history, self.context_llm)

        branches = [agent_branch(self.agents[aid]) for aid in activated]
        results = await asyncio.gather(*branches, analysis_branch())
        bundles: list[RetrievalBundle] = list(results[:-1])
        analysis: Optional[ContextAnalysis] = results[-1]
        t_stage2 = self.clock()

        for bundle in bundles:
            notes.extend(f"{bundle.agent_id}: {n}" for n in bundle.error_notes)
        query = Query(
            query.original,
            query.enriched,
            {
                b.agent_id: list(b.rewritten_query)
                if isinstance(b.rewritten_query, tuple)
                else b.rewritten_query
                for b in bundles
            },
        )

        # Final: rerank, stream the answer, then look-back citations.
        context = rerank(query.effective, bundles, self.config.summarizer.chunk_budget, self.reranker)
        char_cap = self.config.summarizer.per_chunk_char_cap
        full_history = None if manager_on else history
        answer_parts: list[str] = []
        failed = False
        fail_event: Optional[dict[str, Any]] = None
        try:
            async for token in generate_answer_stream(
                query.original, analysis, full_history, context, self.llm, char_cap
            ):
                answer_parts.append(token)
                yield _event("token", {"text": token})
        except StreamInterrupted as exc:
            failed = True
            fail_event = _event(
                "error",
                {"code": "StreamInterrupted", "message": str(exc), "partial_text": exc.partial_text},
            )
        except BackendUnavailable as exc:
            failed = True
            fail_event = _event("error", {"code": "TurnFailed", "message": str(exc)})

        answer = "".join(answer_parts)
        citations: list[Citation] = []
        if not failed:
            citations = await generate_citations(answer, context, self.llm, char_cap)
            yield _event("citations", {"citations": [c.to_dict() for c in citations]})
            ts = int(self.clock() * 1000)
            session.history = session.history.append("user", user_text, ts)
            session.history = session.history.append("assistant", answer or "(no answer)", ts)
            session.updated_ms = ts
        else:
            assert fail_event is not None
            notes.append(fail_event["data"]["code"])
            yield fail_event

        t_end = self.clock()
        trace = TurnTrace(
            turn_id=turn_id,
            query=query.original,
            enriched_query=query.effective,
            activated_agents=list(activated),
            agent_scores=None if scores is None else {k: float(v) for k, v in sorted(scores.items())},
            rewritten_queries=dict(query.per_agent_rewrites),
            chunk_counts={b.agent_id: len(b.items) for b in bundles},
            presented_chunks=len(context),
            dropped_chunks=context.dropped,
            context_manager_enabled=manager_on,
            routing_enabled=bool(routing_on),
            llm_calls=(len(self.call_log) - calls_before) if self.call_log is not None else -1,
            error_notes=notes,
            stage1_ms=(t_stage1 - t_start) * 1000.0,
            stage2_ms=(t_stage2 - t_stage1) * 1000.0,
            final_ms=(t_end - t_stage2) * 1000.0,
            total_ms=(t_end - t_start) * 1000.0,
            failed=failed,
        )
        self._emit_trace(trace)
        yield _event("done", {"trace": trace.to_dict()})

    async def answer(self, session: Session, user_text: str) -> TurnResult:
        """Collect a whole turn; convenience for CLI and tests."""
        events: list[dict[str, Any]] = []
        answer_parts: list[str] = []
        citations: list[Citation] = []
        trace: Optional[TurnTrace] = None
        async for event in self.run_turn(session, user_text):
            events.append(event)
            if event["event"] == "token":
                answer_parts.append(event["data"]["text"])
            elif event["event"] == "citations":
                citations = [
                    Citation(
                        source_uri=c["source_uri"],
                        source_name=c["source_name"],
                        chunk_ids=tuple(c["chunk_ids"]),
                        display_index=c["display_index"],
                    )
                    for c in event["data"]["citations"]
                ]
            elif event["event"] == "done":
                trace = TurnTrace(**event["data"]["trace"])
        return TurnResult("".join(answer_parts), citations, trace, events)


def _merge_stores(stores: list[VectorStore]) -> VectorStore:
    if len(stores) == 1:
        return stores[0]
    chunks = []
    for store in stores:
        chunks.extend(store.chunks)
    return VectorStore(chunks)


def new_session(session_id: Optional[str] = None, now_ms: Optional[int] = None) -> Session:
    if now_ms is None:
        now_ms = int(time.time() * 1000)
    return Session(session_id=session_id or uuid.uuid4().hex[:12], created_ms=now_ms, updated_ms=now_ms)
