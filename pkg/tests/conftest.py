"""Shared fixtures: tiny engines, mock scripts, and corpus builders."""

from __future__ import annotations

import asyncio
from pathlib import Path

import numpy as np
import pytest

from ragmux.config import validate_config
from ragmux.llm import CallLog, HashEmbedder, MockChatModel, MockRule, MockScript
from ragmux.model import KnowledgeChunk
from ragmux.pipeline import Engine
from ragmux.store import VectorStore

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


def run(coro):
    return asyncio.run(coro)


def unit(vec) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    return arr / np.linalg.norm(arr)


def make_chunk(chunk_id: str, text: str, embedding=None, source_name: str = "src",
               source_uri: str | None = None, source_kind: str = "vdb") -> KnowledgeChunk:
    return KnowledgeChunk(
        chunk_id=chunk_id,
        text=text,
        embedding=None if embedding is None else unit(embedding),
        source_uri=source_uri if source_uri is not None else f"file:///{chunk_id}",
        source_kind=source_kind,
        source_name=source_name,
    )


def mock_model(rules: list[MockRule] | None = None, default: str = "", log: CallLog | None = None,
               default_latency_ms: int = 0) -> MockChatModel:
    script = MockScript(rules=tuple(rules or ()), default_response=default,
                        default_latency_ms=default_latency_ms)
    return MockChatModel(script, log=log)


@pytest.fixture
def embedder() -> HashEmbedder:
    return HashEmbedder(dim=16)


def toy_vdb_config(tmp_path: Path, docs: dict[str, str], *, n_agents: int = 1,
                   router_enabled: bool | None = None, context_manager: bool = True,
                   rewrite=None, extra_agent=None):
    """One vdb source + n agents over it, corpus written under tmp_path."""
    corpus = tmp_path / "corpus"
    corpus.mkdir(exist_ok=True)
    for name, text in docs.items():
        (corpus / name).write_text(text, encoding="utf-8")
    agents = []
    for i in range(n_agents):
        agents.append({
            "id": f"agent{i}",
            "sources": ["docs"],
            "rewrite": rewrite or [],
        })
    if extra_agent:
        agents.append(extra_agent)
    raw = {
        "llm": {"backend": "mock", "embedding_dim": 16},
        "knowledge_sources": [{
            "id": "docs",
            "kind": "vdb",
            "paths": [str(corpus)],
            "chunking": {"max_chars": 400, "overlap_chars": 0, "split": "paragraph"},
        }],
        "agents": agents,
        "summarizer": {"chunk_budget": 8},
        "pipeline": {"context_manager": context_manager},
    }
    if router_enabled is not None:
        raw["router"] = {"enabled": router_enabled}
    return validate_config(raw)


def build_toy_engine(tmp_path: Path, docs: dict[str, str], chat: MockChatModel, **kw) -> Engine:
    config = toy_vdb_config(tmp_path, docs, **kw)
    return Engine.build(config, chat_model=chat, embedder=HashEmbedder(dim=16))


def store_of(*chunks: KnowledgeChunk) -> VectorStore:
    return VectorStore(list(chunks))
