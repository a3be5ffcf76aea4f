"""In-memory hybrid vector store: exact dense search, BM25, and fusion.

Exact (non-approximate) search over desk-scale corpora; the store sits
behind this interface so an external engine can replace it later.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Optional

import numpy as np

from .llm import hash_tokenize
from .model import KnowledgeChunk

BM25_K1 = 1.2
BM25_B = 0.75


class VectorStore:
    """Holds embedded chunks plus the inverted index for sparse scoring.

    Construction takes exclusive ownership of the chunk list; reads are
    safe to run concurrently afterwards.
    """

    def __init__(self, chunks: list[KnowledgeChunk]):
        self.chunks: list[KnowledgeChunk] = list(chunks)
        self._by_id = {c.chunk_id: c for c in self.chunks}
        if len(self._by_id) != len(self.chunks):
            raise ValueError("chunk_id must be unique within one store")
        embedded = [c for c in self.chunks if c.embedding is not None]
        self._matrix = (
            np.stack([c.embedding for c in embedded]) if embedded else np.zeros((0, 0))
        )
        self._embedded_ids = [c.chunk_id for c in embedded]

        self.inverted_index: dict[str, list[tuple[str, int]]] = {}
        self.doc_lengths: dict[str, int] = {}
        for chunk in self.chunks:
            tokens = hash_tokenize(chunk.text)
            self.doc_lengths[chunk.chunk_id] = len(tokens)
            for term, tf in sorted(Counter(tokens).items()):
                self.inverted_index.setdefault(term, []).append((chunk.chunk_id, tf))
        self.avg_doc_length = (
            sum(self.doc_lengths.values()) / len(self.doc_lengths) if self.doc_lengths else 0.0
        )

    def __len__(self) -> int:
        return len(self.chunks)

    def get(self, chunk_id: str) -> KnowledgeChunk:
        return self._by_id[chunk_id]

    # ---- dense ----

    def dense_search(self, query_vec: np.ndarray, n: int) -> list[tuple[KnowledgeChunk, float]]:
        """Top-n chunks by cosine (dot product on unit vectors), descending.

        Ties break by ascending chunk_id. n larger than the store returns
        everything.
        """
        if self._matrix.size == 0:
            return []
        scores = self._matrix @ np.asarray(query_vec, dtype=np.float64)
        order = sorted(
            range(len(self._embedded_ids)),
            key=lambda i: (-scores[i], self._embedded_ids[i]),
        )
        return [(self._by_id[self._embedded_ids[i]], float(scores[i])) for i in order[:n]]

    # ---- sparse ----

    def _idf(self, term: str) -> float:
        n_t = len(self.inverted_index.get(term, ()))
        n_docs = len(self.chunks)
        return math.log(1.0 + (n_docs - n_t + 0.5) / (n_t + 0.5))

    def sparse_scores(self, query: str) -> dict[str, float]:
        """BM25 over the query's unique terms; chunks scoring 0 are absent."""
        scores: dict[str, float] = {}
        for term in sorted(set(hash_tokenize(query))):
            postings = self.inverted_index.get(term)
            if not postings:
                continue
            idf = self._idf(term)
            for chunk_id, tf in postings:
                dl = self.doc_lengths[chunk_id]
                denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / self.avg_doc_length)
                scores[chunk_id] = scores.get(chunk_id, 0.0) + idf * tf * (BM25_K1 + 1.0) / denom
        return scores

    def sparse_search(self, query: str, n: int) -> list[tuple[KnowledgeChunk, float]]:
        scores = self.sparse_scores(query)
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(self._by_id[cid], s) for cid, s in ranked[:n]]

    # ---- hybrid ----

    def hybrid_search(
        self,
        query: str,
        query_vec: Optional[np.ndarray],
        n: int,
        alpha: float = 0.5,
    ) -> list[tuple[KnowledgeChunk, float]]:
        """Fuse dense and sparse rankings by min-max weighted sum.

        Candidates are the union of each side's top-(2n); both raw scores
        are min-max normalized over that union (a degenerate min=max side
        normalizes to 1.0), then fused as alpha*dense + (1-alpha)*sparse.
        alpha=1 reproduces the dense ordering, alpha=0 the sparse one.
        """
        if not (0.0 <= alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")
        dense_top = self.dense_search(query_vec, 2 * n) if query_vec is not None else []
        sparse_raw = self.sparse_scores(query)
        sparse_top = sorted(sparse_raw.items(), key=lambda kv: (-kv[1], kv[0]))[: 2 * n]

        candidates = {c.chunk_id for c, _ in dense_top} | {cid for cid, _ in sparse_top}
        if not candidates:
            return []
        ids = sorted(candidates)

        if query_vec is not None and self._matrix.size:
            idx = {cid: i for i, cid in enumerate(self._embedded_ids)}
            qv = np.asarray(query_vec, dtype=np.float64)
            dense_scores = {
                cid: float(self._matrix[idx[cid]] @ qv) if cid in idx else 0.0 for cid in ids
            }
        else:
            dense_scores = {cid: 0.0 for cid in ids}
        sparse_scores = {cid: sparse_raw.get(cid, 0.0) for cid in ids}

        dnorm = _minmax(dense_scores)
        snorm = _minmax(sparse_scores)
        fused = {cid: alpha * dnorm[cid] + (1.0 - alpha) * snorm[cid] for cid in ids}
        ranked = sorted(fused.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(self._by_id[cid], score) for cid, score in ranked[:n]]


def _minmax(scores: dict[str, float]) -> dict[str, float]:
    lo = min(scores.values())
    hi = max(scores.values())
    if hi - lo < 1e-12:
        return {cid: 1.0 for cid in scores}
    return {cid: (s - lo) / (hi - lo) for cid, s in scores.items()}
