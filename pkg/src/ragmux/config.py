"""Declarative engine configuration: schema, defaults, validation.

A config file is a key tree (YAML or JSON) with top-level keys `agents`,
`knowledge_sources`, `router`, `summarizer`, `llm`, `pipeline`. validate_config
turns the raw tree into a fully defaulted EngineConfig or raises ConfigError
with every violation found. Defaulting is deterministic and idempotent:
validating the output of `to_raw()` reproduces the same EngineConfig.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigError, Violation

SOURCE_KINDS = ("vdb", "search_engine", "http_api")
STRATEGY_KINDS = ("prompt", "retrieval", "keyword", "hyde", "translation", "custom")
RERANKER_KINDS = ("tf_cosine", "http")
LLM_BACKENDS = ("mock", "http")

# Defaults (paper gives no numbers; chosen to exercise every code path).
DEFAULT_ROUTER_K = 2
DEFAULT_MIXIN_WEIGHT = 0.5
DEFAULT_SCALE = 1.0
DEFAULT_CHUNK_BUDGET = 8
DEFAULT_SEED = 42
DEFAULT_MAX_CHUNK_CHARS = 1200
DEFAULT_OVERLAP_CHARS = 200
DEFAULT_N_PER_SOURCE = 5
DEFAULT_AGENT_TIMEOUT_S = 10.0
DEFAULT_HISTORY_MAX_CHARS = 8000
DEFAULT_CHAR_CAP = 2000
DEFAULT_EMBEDDING_DIM = 64

# Config keys holding filesystem paths, resolved against the config file dir.
_PATH_KEYS = ("paths", "fixture_dir", "mock_script", "template_file", "mixin_file")


@dataclass(frozen=True)
class ChunkingConfig:
    max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS
    overlap_chars: int = DEFAULT_OVERLAP_CHARS
    split_preference: str = "paragraph"

    def to_raw(self) -> dict[str, Any]:
        return {
            "max_chars": self.max_chunk_chars,
            "overlap_chars": self.overlap_chars,
            "split": self.split_preference,
        }


@dataclass(frozen=True)
class StrategyConfig:
    """One rewrite step in an agent's chain."""

    kind: str
    template: str
    n_context_chunks: int = 3
    target_language: Optional[str] = None
    source_language: Optional[str] = None
    name: Optional[str] = None  # registry name for kind=custom

    def to_raw(self) -> dict[str, Any]:
        raw: dict[str, Any] = {"kind": self.kind, "template": self.template}
        if self.kind == "retrieval":
            raw["n_context_chunks"] = self.n_context_chunks
        if self.target_language is not None:
            raw["target_language"] = self.target_language
        if self.source_language is not None:
            raw["source_language"] = self.source_language
        if self.name is not None:
            raw["name"] = self.name
        return raw


@dataclass(frozen=True)
class SourceConfig:
    id: str
    kind: str
    paths: tuple[str, ...] = ()
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    fixture_dir: Optional[str] = None
    mode: str = "fixture"  # fixture | live
    constraints: Optional[str] = None
    endpoint: Optional[str] = None
    params: dict[str, str] = field(default_factory=dict)
    response_path: Optional[str] = None
    field_map: dict[str, str] = field(default_factory=dict)

    def to_raw(self) -> dict[str, Any]:
        raw: dict[str, Any] = {"id": self.id, "kind": self.kind}
        if self.kind == "vdb":
            raw["paths"] = list(self.paths)
            raw["chunking"] = self.chunking.to_raw()
        else:
            raw["mode"] = self.mode
            if self.fixture_dir is not None:
                raw["fixture_dir"] = self.fixture_dir
            if self.constraints is not None:
                raw["constraints"] = self.constraints
        if self.kind == "http_api":
            raw["endpoint"] = self.endpoint
            raw["params"] = dict(self.params)
            raw["response_path"] = self.response_path
            if self.field_map:
                raw["field_map"] = dict(self.field_map)
        return raw


@dataclass(frozen=True)
class AgentConfig:
    id: str
    sources: tuple[str, ...]
    rewrite: tuple[StrategyConfig, ...] = ()
    digest: bool = False
    mixin: tuple[str, ...] = ()
    mixin_file: Optional[str] = None
    mixin_weight: float = DEFAULT_MIXIN_WEIGHT
    scale: float = DEFAULT_SCALE
    clusters: Optional[int] = None

    def to_raw(self) -> dict[str, Any]:
        raw: dict[str, Any] = {
            "id": self.id,
            "sources": list(self.sources),
            "rewrite": [s.to_raw() for s in self.rewrite],
            "digest": self.digest,
            "mixin_weight": self.mixin_weight,
            "scale": self.scale,
        }
        if self.mixin:
            raw["mixin"] = list(self.mixin)
        if self.mixin_file is not None:
            raw["mixin_file"] = self.mixin_file
        if self.clusters is not None:
            raw["clusters"] = self.clusters
        return raw


@dataclass(frozen=True)
class RouterConfig:
    enabled: bool = True
    k: int = DEFAULT_ROUTER_K
    seed: int = DEFAULT_SEED
    min_score: Optional[float] = None

    def to_raw(self) -> dict[str, Any]:
        raw: dict[str, Any] = {"enabled": self.enabled, "k": self.k, "seed": self.seed}
        if self.min_score is not None:
            raw["min_score"] = self.min_score
        return raw


@dataclass(frozen=True)
class SummarizerConfig:
    chunk_budget: int = DEFAULT_CHUNK_BUDGET
    reranker: str = "tf_cosine"
    per_chunk_char_cap: int = DEFAULT_CHAR_CAP
    rerank_endpoint: Optional[str] = None

    def to_raw(self) -> dict[str, Any]:
        raw: dict[str, Any] = {
            "chunk_budget": self.chunk_budget,
            "reranker": self.reranker,
            "per_chunk_char_cap": self.per_chunk_char_cap,
        }
        if self.rerank_endpoint is not None:
            raw["rerank_endpoint"] = self.rerank_endpoint
        return raw


@dataclass(frozen=True)
class LlmConfig:
    backend: str = "mock"
    model: str = "main"
    context_model: str = "main"  # lighter model for the context manager
    mock_script: Optional[str] = None
    embedding_dim: int = DEFAULT_EMBEDDING_DIM
    request_timeout_s: float = 60.0

    def to_raw(self) -> dict[str, Any]:
        raw: dict[str, Any] = {
            "backend": self.backend,
            "model": self.model,
            "context_model": self.context_model,
            "embedding_dim": self.embedding_dim,
            "request_timeout_s": self.request_timeout_s,
        }
        if self.mock_script is not None:
            raw["mock_script"] = self.mock_script
        return raw


@dataclass(frozen=True)
class PipelineConfig:
    context_manager: bool = True
    n_per_source: int = DEFAULT_N_PER_SOURCE
    agent_timeout_s: float = DEFAULT_AGENT_TIMEOUT_S
    history_max_chars: int = DEFAULT_HISTORY_MAX_CHARS

    def to_raw(self) -> dict[str, Any]:
        return {
            "context_manager": self.context_manager,
            "n_per_source": self.n_per_source,
            "agent_timeout_s": self.agent_timeout_s,
            "history_max_chars": self.history_max_chars,
        }


@dataclass(frozen=True)
class EngineConfig:
    agents: tuple[AgentConfig, ...]
    knowledge_sources: tuple[SourceConfig, ...]
    router: RouterConfig
    summarizer: SummarizerConfig
    llm: LlmConfig
    pipeline: PipelineConfig

    def source(self, source_id: str) -> SourceConfig:
        for src in self.knowledge_sources:
            if src.id == source_id:
                return src
        raise KeyError(source_id)

    def agent(self, agent_id: str) -> AgentConfig:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def to_raw(self) -> dict[str, Any]:
        return {
            "agents": [a.to_raw() for a in self.agents],
            "knowledge_sources": [s.to_raw() for s in self.knowledge_sources],
            "router": self.router.to_raw(),
            "summarizer": self.summarizer.to_raw(),
            "llm": self.llm.to_raw(),
            "pipeline": self.pipeline.to_raw(),
        }


def load_raw(path: str | Path) -> dict[str, Any]:
    """Read a YAML/JSON config file and resolve its relative paths."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        raw = yaml.safe_load(text)
    else:
        raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ConfigError([Violation("InvalidConfig", "<root>", "config root must be a mapping")])
    _resolve_paths(raw, path.parent)
    return raw


def load_config(path: str | Path) -> EngineConfig:
    return validate_config(load_raw(path))


def _resolve_paths(node: Any, base: Path) -> None:
    if isinstance(node, dict):
        for key, value in node.items():
            if key in _PATH_KEYS:
                if isinstance(value, str):
                    node[key] = str((base / value).resolve()) if not Path(value).is_absolute() else value
                elif isinstance(value, list):
                    node[key] = [
                        str((base / v).resolve()) if isinstance(v, str) and not Path(v).is_absolute() else v
                        for v in value
                    ]
            else:
                _resolve_paths(value, base)
    elif isinstance(node, list):
        for item in node:
            _resolve_paths(item, base)


class _Collector:
    def __init__(self) -> None:
        self.violations: list[Violation] = []

    def add(self, code: str, field_name: str, message: str) -> None:
        self.violations.append(Violation(code, field_name, message))


def _default_template(kind: str) -> str:
    from . import prompts

    return {
        "prompt": prompts.PROMPT_REWRITE_DEFAULT,
        "retrieval": prompts.RETRIEVAL_REWRITE_DEFAULT,
        "keyword": prompts.KEYWORD_REWRITE_DEFAULT,
        "hyde": prompts.HYDE_REWRITE_DEFAULT,
        "translation": prompts.TRANSLATION_REWRITE_DEFAULT,
        "custom": "{query}",
    }[kind]


def _parse_strategy(raw: dict[str, Any], where: str, col: _Collector) -> Optional[StrategyConfig]:
    kind = raw.get("kind")
    if kind not in STRATEGY_KINDS:
        col.add("UnknownKind", where, f"unknown rewrite kind: {kind!r}")
        return None
    template = raw.get("template")
    if template is None and raw.get("template_file"):
        try:
            template = Path(raw["template_file"]).read_text(encoding="utf-8")
        except OSError as exc:
            col.add("UnreadablePath", where, f"template_file: {exc}")
            return None
    if template is None:
        template = _default_template(kind)
    if "{query}" not in template:
        col.add("InvalidTemplate", where, "template must contain {query}")
    if kind == "translation" and not raw.get("target_language"):
        col.add("InvalidStrategy", where, "translation rewrite requires target_language")
    if kind == "custom" and not raw.get("name"):
        col.add("InvalidStrategy", where, "custom rewrite requires a registered name")
    n_ctx = raw.get("n_context_chunks", 3)
    if kind == "retrieval" and (not isinstance(n_ctx, int) or n_ctx < 1):
        col.add("InvalidRange", f"{where}.n_context_chunks", "must be >= 1")
        n_ctx = 3
    return StrategyConfig(
        kind=kind,
        template=template,
        n_context_chunks=n_ctx,
        target_language=raw.get("target_language"),
        source_language=raw.get("source_language"),
        name=raw.get("name"),
    )


def _parse_source(raw: dict[str, Any], col: _Collector) -> Optional[SourceConfig]:
    sid = raw.get("id")
    if not sid:
        col.add("InvalidConfig", "knowledge_sources", "source missing id")
        return None
    where = f"knowledge_sources.{sid}"
    kind = raw.get("kind")
    if kind not in SOURCE_KINDS:
        col.add("UnknownKind", where, f"unknown source kind: {kind!r}")
        return None
    chunk_raw = raw.get("chunking", {}) or {}
    chunking = ChunkingConfig(
        max_chunk_chars=chunk_raw.get("max_chars", DEFAULT_MAX_CHUNK_CHARS),
        overlap_chars=chunk_raw.get("overlap_chars", DEFAULT_OVERLAP_CHARS),
        split_preference=chunk_raw.get("split", "paragraph"),
    )
    if chunking.max_chunk_chars < 1:
        col.add("InvalidRange", f"{where}.chunking.max_chars", "must be >= 1")
    if not (0 <= chunking.overlap_chars < max(chunking.max_chunk_chars, 1)):
        col.add(
            "InvalidRange",
            f"{where}.chunking.overlap_chars",
            "must satisfy 0 <= overlap < max_chars",
        )
    if chunking.split_preference not in ("paragraph", "line", "fixed"):
        col.add("UnknownKind", f"{where}.chunking.split", f"unknown split: {chunking.split_preference!r}")
    if kind == "vdb" and not raw.get("paths"):
        col.add("InvalidConfig", where, "vdb source requires paths")
    mode = raw.get("mode", "fixture")
    if kind != "vdb" and mode not in ("fixture", "live"):
        col.add("UnknownKind", f"{where}.mode", f"unknown mode: {mode!r}")
    if kind != "vdb" and mode == "fixture" and not raw.get("fixture_dir"):
        col.add("InvalidConfig", where, "fixture-mode source requires fixture_dir")
    if kind == "http_api":
        if not raw.get("endpoint"):
            col.add("InvalidConfig", where, "http_api source requires endpoint")
        if not raw.get("response_path"):
            col.add("InvalidConfig", where, "http_api source requires response_path")
    return SourceConfig(
        id=sid,
        kind=kind,
        paths=tuple(raw.get("paths", []) or []),
        chunking=chunking,
        fixture_dir=raw.get("fixture_dir"),
        mode=mode,
        constraints=raw.get("constraints"),
        endpoint=raw.get("endpoint"),
        params=dict(raw.get("params", {}) or {}),
        response_path=raw.get("response_path"),
        field_map=dict(raw.get("field_map", {}) or {}),
    )


def _parse_agent(
    raw: dict[str, Any], sources: dict[str, SourceConfig], col: _Collector
) -> Optional[AgentConfig]:
    aid = raw.get("id")
    if not aid:
        col.add("InvalidConfig", "agents", "agent missing id")
        return None
    where = f"agents.{aid}"
    declared = raw.get("sources", []) or []
    if not declared:
        col.add("InvalidConfig", where, "agent requires at least one source")
    agent_sources: list[SourceConfig] = []
    for ref in declared:
        if ref not in sources:
            col.add("UnknownSourceReference", where, f"undeclared source {ref!r}")
        else:
            agent_sources.append(sources[ref])

    chain: list[StrategyConfig] = []
    for i, step in enumerate(raw.get("rewrite", []) or []):
        parsed = _parse_strategy(step, f"{where}.rewrite[{i}]", col)
        if parsed is not None:
            chain.append(parsed)
    for i, step in enumerate(chain):
        if step.kind == "keyword" and i != len(chain) - 1:
            col.add("InvalidChain", where, "keyword rewrite must be the terminal step")
    has_vdb = any(s.kind == "vdb" for s in agent_sources)
    has_online = any(s.kind in ("search_engine", "http_api") for s in agent_sources)
    if any(s.kind == "retrieval" for s in chain) and not has_vdb:
        col.add("InvalidChain", where, "retrieval rewrite requires a vdb source")
    if any(s.kind == "search_engine" for s in agent_sources):
        if not chain or chain[-1].kind != "keyword":
            col.add("InvalidChain", where, "search_engine sources require a chain ending in keyword rewrite")

    mixin = tuple(raw.get("mixin", []) or [])
    mixin_file = raw.get("mixin_file")
    has_mixin = bool(mixin) or bool(mixin_file)

    # Mix-in weight conventions: online-only agents route on mix-in alone,
    # mixin-less agents route on local centroids alone.
    w = raw.get("mixin_weight", DEFAULT_MIXIN_WEIGHT)
    if not isinstance(w, (int, float)) or not (0.0 <= float(w) <= 1.0):
        col.add("InvalidRange", f"{where}.mixin_weight", f"must be in [0, 1], got {w!r}")
        w = DEFAULT_MIXIN_WEIGHT
    if not has_vdb:
        w = 1.0
        if not has_mixin and agent_sources:
            col.add("MissingMixin", where, "an agent with only online sources needs a mix-in for routing")
    elif not has_mixin:
        w = 0.0

    scale = raw.get("scale", DEFAULT_SCALE)
    if not isinstance(scale, (int, float)) or float(scale) <= 0.0:
        col.add("InvalidRange", f"{where}.scale", f"must be > 0, got {scale!r}")
        scale = DEFAULT_SCALE

    clusters = raw.get("clusters")
    if clusters is not None and (not isinstance(clusters, int) or clusters < 1):
        col.add("InvalidRange", f"{where}.clusters", "must be >= 1")
        clusters = None

    return AgentConfig(
        id=aid,
        sources=tuple(declared),
        rewrite=tuple(chain),
        digest=bool(raw.get("digest", False)),
        mixin=mixin,
        mixin_file=mixin_file,
        mixin_weight=float(w),
        scale=float(scale),
        clusters=clusters,
    )


def validate_config(raw: dict[str, Any]) -> EngineConfig:
    """Validate a raw config tree into a fully defaulted EngineConfig.

    Raises ConfigError listing every violation rather than stopping at the
    first one. Idempotent: validate_config(cfg.to_raw()) == cfg.
    """
    col = _Collector()

    sources: dict[str, SourceConfig] = {}
    for src_raw in raw.get("knowledge_sources", []) or []:
        src = _parse_source(src_raw, col)
        if src is None:
            continue
        if src.id in sources:
            col.add("DuplicateSourceId", f"knowledge_sources.{src.id}", "duplicate source id")
        sources[src.id] = src

    agents: list[AgentConfig] = []
    seen_agents: set[str] = set()
    for agent_raw in raw.get("agents", []) or []:
        agent = _parse_agent(agent_raw, sources, col)
        if agent is None:
            continue
        if agent.id in seen_agents:
            col.add("DuplicateAgentId", f"agents.{agent.id}", "duplicate agent id")
            continue
        seen_agents.add(agent.id)
        agents.append(agent)
    if not agents:
        col.add("InvalidConfig", "agents", "at least one agent is required")

    router_raw = raw.get("router", {}) or {}
    enabled = router_raw.get("enabled")
    if enabled is None:
        enabled = len(agents) >= 2  # routing only matters with several agents
    k = router_raw.get("k", DEFAULT_ROUTER_K)
    if not isinstance(k, int) or k < 1:
        col.add("InvalidRange", "router.k", f"must be >= 1, got {k!r}")
        k = DEFAULT_ROUTER_K
    min_score = router_raw.get("min_score")
    if min_score is not None and not isinstance(min_score, (int, float)):
        col.add("InvalidRange", "router.min_score", "must be a number")
        min_score = None
    router = RouterConfig(
        enabled=bool(enabled),
        k=k,
        seed=int(router_raw.get("seed", DEFAULT_SEED)),
        min_score=None if min_score is None else float(min_score),
    )

    summ_raw = raw.get("summarizer", {}) or {}
    budget = summ_raw.get("chunk_budget", DEFAULT_CHUNK_BUDGET)
    if not isinstance(budget, int) or budget < 1:
        col.add("InvalidRange", "summarizer.chunk_budget", f"must be >= 1, got {budget!r}")
        budget = DEFAULT_CHUNK_BUDGET
    reranker = summ_raw.get("reranker", "tf_cosine")
    if reranker not in RERANKER_KINDS:
        col.add("UnknownKind", "summarizer.reranker", f"unknown reranker: {reranker!r}")
        reranker = "tf_cosine"
    char_cap = summ_raw.get("per_chunk_char_cap", DEFAULT_CHAR_CAP)
    if not isinstance(char_cap, int) or char_cap < 1:
        col.add("InvalidRange", "summarizer.per_chunk_char_cap", "must be >= 1")
        char_cap = DEFAULT_CHAR_CAP
    summarizer = SummarizerConfig(
        chunk_budget=budget,
        reranker=reranker,
        per_chunk_char_cap=char_cap,
        rerank_endpoint=summ_raw.get("rerank_endpoint"),
    )

    llm_raw = raw.get("llm", {}) or {}
    backend = llm_raw.get("backend", "mock")
    if backend not in LLM_BACKENDS:
        col.add("UnknownKind", "llm.backend", f"unknown backend: {backend!r}")
        backend = "mock"
    dim = llm_raw.get("embedding_dim", DEFAULT_EMBEDDING_DIM)
    if not isinstance(dim, int) or dim < 1:
        col.add("InvalidRange", "llm.embedding_dim", "must be >= 1")
        dim = DEFAULT_EMBEDDING_DIM
    model = llm_raw.get("model", "main")
    llm = LlmConfig(
        backend=backend,
        model=model,
        context_model=llm_raw.get("context_model", model),
        mock_script=llm_raw.get("mock_script"),
        embedding_dim=dim,
        request_timeout_s=float(llm_raw.get("request_timeout_s", 60.0)),
    )

    pipe_raw = raw.get("pipeline", {}) or {}
    n_per_source = pipe_raw.get("n_per_source", DEFAULT_N_PER_SOURCE)
    if not isinstance(n_per_source, int) or n_per_source < 1:
        col.add("InvalidRange", "pipeline.n_per_source", "must be >= 1")
        n_per_source = DEFAULT_N_PER_SOURCE
    timeout_s = pipe_raw.get("agent_timeout_s", DEFAULT_AGENT_TIMEOUT_S)
    if not isinstance(timeout_s, (int, float)) or timeout_s <= 0:
        col.add("InvalidRange", "pipeline.agent_timeout_s", "must be > 0")
        timeout_s = DEFAULT_AGENT_TIMEOUT_S
    history_cap = pipe_raw.get("history_max_chars", DEFAULT_HISTORY_MAX_CHARS)
    if not isinstance(history_cap, int) or history_cap < 1:
        col.add("InvalidRange", "pipeline.history_max_chars", "must be >= 1")
        history_cap = DEFAULT_HISTORY_MAX_CHARS
    pipeline = PipelineConfig(
        context_manager=bool(pipe_raw.get("context_manager", True)),
        n_per_source=n_per_source,
        agent_timeout_s=float(timeout_s),
        history_max_chars=history_cap,
    )

    if col.violations:
        raise ConfigError(col.violations)

    return EngineConfig(
        agents=tuple(agents),
        knowledge_sources=tuple(sources.values()),
        router=router,
        summarizer=summarizer,
        llm=llm,
        pipeline=pipeline,
    )
