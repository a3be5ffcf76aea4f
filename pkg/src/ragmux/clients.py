"""Online knowledge clients: search engine and domain HTTP APIs.

Both run in fixture mode for offline, deterministic operation: recorded
responses are loaded from a directory of JSON files, one per normalized
query. Live mode for the HTTP-API client does a real GET; a live search
engine is out of scope (the interface is the extension point).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import FixtureMiss, NetworkError, ParsePathMiss, UnboundPlaceholder
from .model import KnowledgeChunk


@dataclass(frozen=True)
class SearchResult:
    title: str
    snippet: str
    url: str
    rank: int

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError("rank must be >= 1")


def normalize_keywords(keywords: list[str], constraint: Optional[str] = None) -> tuple[str, ...]:
    """Canonical fixture key: lowercased, sorted, constraint appended."""
    key = sorted(k.strip().lower() for k in keywords if k.strip())
    if constraint:
        key.append(constraint.strip().lower())
    return tuple(key)


def _load_fixture_dir(fixture_dir: str | Path) -> list[dict[str, Any]]:
    records = []
    for path in sorted(Path(fixture_dir).glob("*.json")):
        records.append(json.loads(path.read_text(encoding="utf-8")))
    return records


def results_from_records(records: list[dict[str, Any]], n: int) -> list[SearchResult]:
    out = []
    for i, rec in enumerate(records[:n], start=1):
        out.append(
            SearchResult(
                title=str(rec.get("title", "")),
                snippet=str(rec.get("snippet", "")),
                url=str(rec.get("url", "")),
                rank=i,
            )
        )
    return out


class FixtureSearchClient:
    """Replays recorded search-engine responses keyed by normalized keywords."""

    def __init__(self, fixture_dir: str | Path, constraint: Optional[str] = None):
        self.constraint = constraint
        self._index: dict[tuple[str, ...], list[dict[str, Any]]] = {}
        for rec in _load_fixture_dir(fixture_dir):
            key = normalize_keywords(list(rec.get("keywords", [])), rec.get("constraint"))
            self._index[key] = list(rec.get("results", []))

    def search(self, keywords: list[str], n: int) -> list[SearchResult]:
        key = normalize_keywords(keywords, self.constraint)
        if key not in self._index:
            raise FixtureMiss(f"no fixture recorded for {key!r}")
        return results_from_records(self._index[key], n)


class LiveSearchClient:
    """Placeholder for a real engine; wire an implementation in via config."""

    def __init__(self, constraint: Optional[str] = None):
        self.constraint = constraint

    def search(self, keywords: list[str], n: int) -> list[SearchResult]:
        raise NetworkError("no live search engine is configured")


_PLACEHOLDER = re.compile(r"\{([a-zA-Z0-9_]+)\}")


def render_endpoint(template: str, params: dict[str, str]) -> str:
    """Fill {name} placeholders; every placeholder must be bound."""
    def sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in params:
            raise UnboundPlaceholder(name)
        return str(params[name])

    return _PLACEHOLDER.sub(sub, template)


def walk_response_path(node: Any, path: str) -> list[Any]:
    """Walk a dot/bracket path like "data.items[]" down to a list of items."""
    for part in path.split("."):
        is_list = part.endswith("[]")
        key = part[:-2] if is_list else part
        if key:
            if not isinstance(node, dict) or key not in node:
                raise ParsePathMiss(f"missing key {key!r} in response path {path!r}")
            node = node[key]
        if is_list and not isinstance(node, list):
            raise ParsePathMiss(f"{key or path!r} is not a list")
    if not isinstance(node, list):
        raise ParsePathMiss(f"response path {path!r} did not end on a list")
    return node


DEFAULT_FIELD_MAP = {"title": "title", "snippet": "snippet", "url": "url"}


class HttpApiClient:
    """Domain in-site search over a templated endpoint with path extraction."""

    def __init__(
        self,
        endpoint_template: str,
        response_path: str,
        field_map: Optional[dict[str, str]] = None,
        fixture_dir: Optional[str | Path] = None,
        timeout_s: float = 10.0,
    ):
        self.endpoint_template = endpoint_template
        self.response_path = response_path
        self.field_map = {**DEFAULT_FIELD_MAP, **(field_map or {})}
        self.timeout_s = timeout_s
        self._fixtures: Optional[dict[str, Any]] = None
        if fixture_dir is not None:
            self._fixtures = {}
            for rec in _load_fixture_dir(fixture_dir):
                self._fixtures[rec["request"]] = rec.get("response", {})

    def query(self, params: dict[str, str], n: int) -> list[SearchResult]:
        rendered = render_endpoint(self.endpoint_template, params)
        if self._fixtures is not None:
            if rendered not in self._fixtures:
                raise FixtureMiss(f"no fixture recorded for request {rendered!r}")
            response = self._fixtures[rendered]
        else:
            response = self._get(rendered)
        items = walk_response_path(response, self.response_path)
        out = []
        for i, item in enumerate(items[:n], start=1):
            out.append(
                SearchResult(
                    title=str(item.get(self.field_map["title"], "")),
                    snippet=str(item.get(self.field_map["snippet"], "")),
                    url=str(item.get(self.field_map["url"], "")),
                    rank=i,
                )
            )
        return out

    def _get(self, url: str) -> Any:
        import httpx

        try:
            resp = httpx.get(url, timeout=self.timeout_s)
            resp.raise_for_status()
            return resp.json()
        except httpx.HTTPError as exc:
            raise NetworkError(str(exc)) from exc


def search_results_to_chunks(
    results: list[SearchResult], source_name: str, source_kind: str
) -> list[KnowledgeChunk]:
    """Convert engine-ranked results into provenance-tagged chunks.

    Online results carry no embedding; routing for online-only agents uses
    mix-ins instead.
    """
    chunks = []
    for r in results:
        text = f"{r.title}\n{r.snippet}".strip()
        chunks.append(
            KnowledgeChunk(
                chunk_id=f"{source_name}:r{r.rank}",
                text=text,
                embedding=None,
                source_uri=r.url or f"{source_name}#r{r.rank}",
                source_kind=source_kind,
                source_name=source_name,
            )
        )
    return chunks
