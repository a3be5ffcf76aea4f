"""Immutable value types: dialogue turns, queries, and knowledge chunks.

Everything here is safe to share between concurrent pipeline branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

ROLES = ("user", "assistant", "system")

SOURCE_KINDS = ("vdb", "search_engine", "http_api")


@dataclass(frozen=True)
class ChatMessage:
    """One dialogue turn, positioned by a contiguous per-history index."""

    index: int
    role: str
    content: str
    timestamp_ms: int = 0

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"message index must be >= 0, got {self.index}")
        if self.role not in ROLES:
            raise ValueError(f"unknown role: {self.role!r}")
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "role": self.role,
            "content": self.content,
            "timestamp_ms": self.timestamp_ms,
        }


@dataclass(frozen=True)
class ConversationHistory:
    """Ordered, zero-based dialogue history. Append returns a new value."""

    messages: tuple[ChatMessage, ...] = ()

    def __post_init__(self) -> None:
        for pos, msg in enumerate(self.messages):
            if msg.index != pos:
                raise ValueError(
                    f"history indices must be contiguous from 0; "
                    f"position {pos} holds index {msg.index}"
                )

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self):
        return iter(self.messages)

    def __getitem__(self, i: int) -> ChatMessage:
        return self.messages[i]

    def append(self, role: str, content: str, timestamp_ms: int = 0) -> "ConversationHistory":
        msg = ChatMessage(len(self.messages), role, content, timestamp_ms)
        return ConversationHistory(self.messages + (msg,))

    def to_dicts(self) -> list[dict[str, Any]]:
        return [m.to_dict() for m in self.messages]

    @classmethod
    def from_dicts(cls, records: list[dict[str, Any]]) -> "ConversationHistory":
        return cls(
            tuple(
                ChatMessage(r["index"], r["role"], r["content"], r.get("timestamp_ms", 0))
                for r in records
            )
        )


def history_window(history: ConversationHistory, max_chars: int) -> ConversationHistory:
    """Longest suffix of whole messages whose content totals <= max_chars.

    The latest message is always kept, even when it alone exceeds the cap.
    """
    if max_chars < 1:
        raise ValueError("max_chars must be >= 1")
    if not history.messages:
        return history
    kept: list[ChatMessage] = []
    total = 0
    for msg in reversed(history.messages):
        length = len(msg.content)
        if kept and total + length > max_chars:
            break
        kept.append(msg)
        total += length
    kept.reverse()
    # Reindex so the result is itself a valid history.
    rebased = tuple(
        ChatMessage(i, m.role, m.content, m.timestamp_ms) for i, m in enumerate(kept)
    )
    return ConversationHistory(rebased)


@dataclass(frozen=True)
class Query:
    """A user query plus its conversation-context and per-agent rewrites."""

    original: str
    enriched: Optional[str] = None
    per_agent_rewrites: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.enriched is not None and not self.enriched:
            raise ValueError("enriched query, when present, must be non-empty")

    @property
    def effective(self) -> str:
        return self.enriched if self.enriched else self.original


@dataclass(frozen=True, eq=False)
class KnowledgeChunk:
    """A unit of retrievable knowledge with provenance for citation mapping.

    Embeddings are stored unit-normalized so cosine similarity is a dot
    product. Search-engine and HTTP-API results carry no embedding.
    """

    chunk_id: str
    text: str
    embedding: Optional[np.ndarray]
    source_uri: str
    source_kind: str
    source_name: str

    def __post_init__(self) -> None:
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source_kind: {self.source_kind!r}")
        if self.embedding is not None:
            norm = float(np.linalg.norm(self.embedding))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(
                    f"chunk {self.chunk_id}: embedding norm {norm:.8f} is not 1"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "chunk_id": self.chunk_id,
            "text": self.text,
            "embedding": None if self.embedding is None else [float(x) for x in self.embedding],
            "source_uri": self.source_uri,
            "source_kind": self.source_kind,
            "source_name": self.source_name,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "KnowledgeChunk":
        emb = d.get("embedding")
        return cls(
            chunk_id=d["chunk_id"],
            text=d["text"],
            embedding=None if emb is None else np.asarray(emb, dtype=np.float64),
            source_uri=d["source_uri"],
            source_kind=d["source_kind"],
            source_name=d["source_name"],
        )
