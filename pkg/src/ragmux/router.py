"""Embedding-cluster routing.

Each agent's local knowledge is summarized by k-means centroids over its
chunk embeddings; manually written mix-in texts are embedded alongside.
An agent's score for a query blends the best mix-in cosine with the best
centroid cosine by the agent's mix-in weight, then applies the agent's
scale factor; the top-K agents by blended score are activated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import KTooLarge
from .llm import Embedder
from .store import VectorStore

MAX_KMEANS_ITERATIONS = 100
MAX_DEFAULT_CLUSTERS = 16


@dataclass
class KMeansResult:
    centroids: np.ndarray  # (k, d), re-normalized
    assignments: np.ndarray  # (n,)
    objective_per_iter: list[float]  # within-cluster squared distance sums


def kmeans(points: np.ndarray, k: int, seed: int = 0) -> KMeansResult:
    """Lloyd iterations with deterministic k-means++ initialization.

    Internally clusters on raw means (which keeps the objective monotone
    non-increasing); only the returned centroids are re-normalized. Empty
    clusters are re-seeded with the point farthest from its centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n == 0:
        raise ValueError("kmeans requires at least one point")
    if k > n:
        raise KTooLarge(f"k={k} exceeds {n} points")

    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(points, k, rng)

    assignments = np.full(n, -1, dtype=np.int64)
    objective_per_iter: list[float] = []
    for _ in range(MAX_KMEANS_ITERATIONS):
        dists = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignments = dists.argmin(axis=1)
        if (new_assignments == assignments).all():
            break
        assignments = new_assignments
        for c in range(k):
            members = points[assignments == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                farthest = int(dists[np.arange(n), assignments].argmax())
                centers[c] = points[farthest]
        objective_per_iter.append(
            float(((points - centers[assignments]) ** 2).sum())
        )

    norms = np.linalg.norm(centers, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return KMeansResult(centers / norms, assignments, objective_per_iter)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[rng.integers(n)]
    closest = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[i] = points[rng.integers(n)]
        else:
            probs = closest / total
            centers[i] = points[rng.choice(n, p=probs)]
        closest = np.minimum(closest, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def default_cluster_count(n_chunks: int) -> int:
    """k = clamp(floor(sqrt(n/2)), 1, 16); bounded for desk scale."""
    return max(1, min(MAX_DEFAULT_CLUSTERS, int(math.floor(math.sqrt(n_chunks / 2.0)))))


@dataclass
class AgentRouting:
    """Per-agent routing anchors; all vectors unit-normalized."""

    agent_id: str
    centroids: np.ndarray  # (m, d); m may be 0 for online-only agents
    mixin_vectors: np.ndarray  # (j, d); j may be 0
    mixin_weight: float  # w=1 for online-only agents, w=0 with no mix-in
    scale: float

    def __post_init__(self) -> None:
        if len(self.centroids) == 0 and self.mixin_weight != 1.0:
            raise ValueError(f"agent {self.agent_id}: no centroids requires w=1")
        if len(self.mixin_vectors) == 0 and self.mixin_weight != 0.0:
            raise ValueError(f"agent {self.agent_id}: no mix-in requires w=0")
        if len(self.centroids) == 0 and len(self.mixin_vectors) == 0:
            raise ValueError(f"agent {self.agent_id}: needs centroids or mix-in vectors")


@dataclass
class RoutingModel:
    """Immutable after build; route() is pure."""

    entries: dict[str, AgentRouting] = field(default_factory=dict)

    @property
    def agent_ids(self) -> list[str]:
        return list(self.entries)


def agent_score(query_vec: np.ndarray, entry: AgentRouting) -> float:
    """S = scale * (w * best mix-in cosine + (1-w) * best centroid cosine)."""
    q = np.asarray(query_vec, dtype=np.float64)
    best_mixin = float((entry.mixin_vectors @ q).max()) if len(entry.mixin_vectors) else 0.0
    best_centroid = float((entry.centroids @ q).max()) if len(entry.centroids) else 0.0
    w = entry.mixin_weight
    return entry.scale * (w * best_mixin + (1.0 - w) * best_centroid)


def score_all(query_vec: np.ndarray, model: RoutingModel) -> dict[str, float]:
    return {aid: agent_score(query_vec, entry) for aid, entry in model.entries.items()}


def route(
    query_vec: np.ndarray,
    model: RoutingModel,
    k: int,
    min_score: Optional[float] = None,
) -> list[str]:
    """Activate the top-min(K, #agents) agents by blended score.

    Ties break by ascending agent id. A min-score threshold that would
    deactivate every agent falls back to considering all of them: a query
    never routes to zero agents.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    scores = score_all(query_vec, model)
    if not scores:
        raise ValueError("routing model has no agents")
    candidates = list(scores)
    if min_score is not None:
        passing = [aid for aid in candidates if scores[aid] >= min_score]
        if passing:
            candidates = passing
    ranked = sorted(candidates, key=lambda aid: (-scores[aid], aid))
    return ranked[: min(k, len(ranked))]


def build_agent_routing(
    agent_id: str,
    store: Optional[VectorStore],
    mixin_texts: list[str],
    mixin_weight: float,
    scale: float,
    clusters: Optional[int],
    embedder: Embedder,
    seed: int,
) -> AgentRouting:
    dim = embedder.dim
    if store is not None and len(store):
        points = np.stack([c.embedding for c in store.chunks if c.embedding is not None])
        k = clusters if clusters is not None else default_cluster_count(len(points))
        k = min(k, len(points))
        centroids = kmeans(points, k, seed=seed).centroids
    else:
        centroids = np.zeros((0, dim))

    if mixin_texts:
        mixin_vectors = np.stack(embedder.embed(mixin_texts))
    else:
        mixin_vectors = np.zeros((0, dim))

    # Weight conventions: mix-in is the only anchor for online-only agents;
    # agents without mix-in route purely on local centroids.
    w = mixin_weight
    if len(centroids) == 0:
        w = 1.0
    elif len(mixin_vectors) == 0:
        w = 0.0
    return AgentRouting(
        agent_id=agent_id,
        centroids=centroids,
        mixin_vectors=mixin_vectors,
        mixin_weight=w,
        scale=scale,
    )


def build_routing_model(
    agents: list[tuple[str, Optional[VectorStore], list[str], float, float, Optional[int]]],
    embedder: Embedder,
    seed: int,
) -> RoutingModel:
    """agents: (agent_id, store, mixin_texts, mixin_weight, scale, clusters)."""
    entries = {}
    for agent_id, store, mixin_texts, w, scale, clusters in agents:
        entries[agent_id] = build_agent_routing(
            agent_id, store, mixin_texts, w, scale, clusters, embedder, seed
        )
    return RoutingModel(entries)
