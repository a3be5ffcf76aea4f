"""Corpus ingestion: chunk, embed, index, and cache offline sources."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .chunking import ChunkingPolicy, chunk_document
from .config import SourceConfig
from .errors import UnreadablePath
from .llm import Embedder
from .model import KnowledgeChunk
from .store import VectorStore

TEXT_EXTENSIONS = {
    ".md", ".markdown", ".txt", ".rst", ".py", ".js", ".ts", ".java", ".go",
    ".rb", ".rs", ".c", ".h", ".cpp", ".json", ".yaml", ".yml", ".toml", ".html",
}


@dataclass(frozen=True)
class IngestStats:
    source_id: str
    chunk_count: int
    embedding_dim: int
    elapsed_s: float
    cache_hit: bool = False
    digest: str = ""


def _iter_files(root: Path) -> list[tuple[str, Path]]:
    """(relative label, path) pairs in sorted order for determinism."""
    if root.is_file():
        return [(root.name, root)]
    if not root.is_dir():
        raise UnreadablePath(str(root))
    out = []
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.suffix.lower() in TEXT_EXTENSIONS:
            out.append((path.relative_to(root).as_posix(), path))
    return out


def ingest_source(source: SourceConfig, embedder: Embedder) -> tuple[VectorStore, IngestStats]:
    """Chunk and embed a vdb source into a fresh VectorStore.

    Deterministic given a fixed embedder: files are visited in sorted
    order and chunk ids derive from the relative path and chunk position.
    """
    started = time.monotonic()
    policy = ChunkingPolicy(
        max_chunk_chars=source.chunking.max_chunk_chars,
        overlap_chars=source.chunking.overlap_chars,
        split_preference=source.chunking.split_preference,
    )
    texts: list[str] = []
    ids: list[str] = []
    uris: list[str] = []
    for path_str in source.paths:
        root = Path(path_str)
        for label, path in _iter_files(root):
            try:
                body = path.read_text(encoding="utf-8", errors="replace")
            except OSError as exc:
                raise UnreadablePath(f"{path}: {exc}") from exc
            if not body.strip():
                continue
            for i, piece in enumerate(chunk_document(body, policy)):
                ids.append(f"{source.id}:{label}#{i:04d}")
                texts.append(piece)
                uris.append(str(path))
    chunks: list[KnowledgeChunk] = []
    if texts:
        vectors = embedder.embed(texts)
        for cid, text, uri, vec in zip(ids, texts, uris, vectors):
            chunks.append(
                KnowledgeChunk(
                    chunk_id=cid,
                    text=text,
                    embedding=vec,
                    source_uri=uri,
                    source_kind="vdb",
                    source_name=source.id,
                )
            )
    store = VectorStore(chunks)
    stats = IngestStats(
        source_id=source.id,
        chunk_count=len(chunks),
        embedding_dim=embedder.dim,
        elapsed_s=time.monotonic() - started,
        digest=store_digest(store),
    )
    return store, stats


def store_to_dict(store: VectorStore) -> dict:
    return {"chunks": [c.to_dict() for c in store.chunks]}


def store_from_dict(raw: dict) -> VectorStore:
    return VectorStore([KnowledgeChunk.from_dict(c) for c in raw["chunks"]])


def store_digest(store: VectorStore) -> str:
    canon = json.dumps(store_to_dict(store), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def corpus_cache_key(source: SourceConfig, embedder: Embedder) -> str:
    """Content hash over the corpus bytes, chunking policy, and embedder id."""
    h = hashlib.sha256()
    h.update(embedder.embedder_id.encode())
    h.update(json.dumps(source.chunking.to_raw(), sort_keys=True).encode())
    for path_str in source.paths:
        root = Path(path_str)
        for label, path in _iter_files(root):
            h.update(label.encode())
            h.update(hashlib.sha256(path.read_bytes()).digest())
    return h.hexdigest()


def ingest_with_cache(
    source: SourceConfig, embedder: Embedder, cache_dir: Optional[str | Path]
) -> tuple[VectorStore, IngestStats]:
    """Ingest, reusing the cached store when the corpus key matches."""
    if cache_dir is None:
        return ingest_source(source, embedder)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = corpus_cache_key(source, embedder)
    cache_file = cache_dir / f"{source.id}.json"
    if cache_file.exists():
        cached = json.loads(cache_file.read_text(encoding="utf-8"))
        if cached.get("key") == key:
            store = store_from_dict(cached["store"])
            stats = IngestStats(
                source_id=source.id,
                chunk_count=len(store),
                embedding_dim=embedder.dim,
                elapsed_s=0.0,
                cache_hit=True,
                digest=store_digest(store),
            )
            return store, stats
    store, stats = ingest_source(source, embedder)
    cache_file.write_text(
        json.dumps({"key": key, "store": store_to_dict(store)}), encoding="utf-8"
    )
    return store, stats


def parse_mixin_blocks(text: str) -> list[str]:
    """Mix-in files hold one description or QA pair per blank-line block."""
    blocks = [b.strip() for b in text.split("\n\n")]
    return [b for b in blocks if b]
