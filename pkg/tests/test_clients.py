"""Fixture-mode search engine and HTTP-API clients."""

import json

import pytest

from ragmux.clients import (
    FixtureSearchClient,
    HttpApiClient,
    LiveSearchClient,
    normalize_keywords,
    render_endpoint,
    search_results_to_chunks,
    walk_response_path,
)
from ragmux.errors import FixtureMiss, NetworkError, ParsePathMiss, UnboundPlaceholder


def write_search_fixture(tmp_path, keywords, results, name="fx.json", constraint=None):
    record = {"keywords": keywords, "results": results}
    if constraint:
        record["constraint"] = constraint
    (tmp_path / name).write_text(json.dumps(record), encoding="utf-8")


THREE = [
    {"title": "t1", "snippet": "s1", "url": "u1"},
    {"title": "t2", "snippet": "s2", "url": "u2"},
    {"title": "t3", "snippet": "s3", "url": "u3"},
]


class TestSearchClient:
    def test_fixture_replay_with_ranks(self, tmp_path):
        write_search_fixture(tmp_path, ["agentflow", "werewolf"], THREE)
        client = FixtureSearchClient(tmp_path)
        results = client.search(["agentflow", "werewolf"], 5)
        assert [r.rank for r in results] == [1, 2, 3]
        assert [r.title for r in results] == ["t1", "t2", "t3"]

    def test_unrecorded_keywords_miss(self, tmp_path):
        write_search_fixture(tmp_path, ["known"], THREE)
        with pytest.raises(FixtureMiss):
            FixtureSearchClient(tmp_path).search(["unknown"], 3)

    def test_normalization_order_and_case(self, tmp_path):
        write_search_fixture(tmp_path, ["agentflow", "werewolf"], THREE)
        client = FixtureSearchClient(tmp_path)
        results = client.search(["Werewolf", "AgentFlow"], 3)
        assert len(results) == 3

    def test_normalize_keywords_by_hand(self):
        assert normalize_keywords(["Werewolf", "AgentFlow"]) == ("agentflow", "werewolf")
        assert normalize_keywords(["b", "A"], constraint="site:x") == ("a", "b", "site:x")

    def test_n_truncates(self, tmp_path):
        write_search_fixture(tmp_path, ["k"], THREE)
        results = FixtureSearchClient(tmp_path).search(["k"], 2)
        assert [r.rank for r in results] == [1, 2]

    def test_live_unconfigured_raises(self):
        with pytest.raises(NetworkError):
            LiveSearchClient().search(["x"], 3)


class TestEndpointTemplate:
    def test_substitution(self):
        assert render_endpoint("/search?q={q}", {"q": "ski"}) == "/search?q=ski"

    def test_unbound_placeholder(self):
        with pytest.raises(UnboundPlaceholder) as excinfo:
            render_endpoint("/search?q={q}", {})
        assert excinfo.value.name == "q"


class TestResponsePath:
    def test_walk_items(self):
        response = {"data": {"items": [{"a": 1}, {"a": 2}]}}
        assert walk_response_path(response, "data.items[]") == [{"a": 1}, {"a": 2}]

    def test_missing_key(self):
        with pytest.raises(ParsePathMiss):
            walk_response_path({"data": {}}, "data.items[]")

    def test_non_list_terminal(self):
        with pytest.raises(ParsePathMiss):
            walk_response_path({"data": {"items": 3}}, "data.items[]")


class TestHttpApiClient:
    def make_client(self, tmp_path, response, field_map=None):
        (tmp_path / "r.json").write_text(
            json.dumps({"request": "https://x.test/search?q=ski", "response": response}),
            encoding="utf-8",
        )
        return HttpApiClient(
            endpoint_template="https://x.test/search?q={q}",
            response_path="data.items[]",
            field_map=field_map,
            fixture_dir=tmp_path,
        )

    def test_two_items_walked_by_hand(self, tmp_path):
        response = {"data": {"items": [
            {"title": "resort a", "snippet": "deep snow", "url": "ua"},
            {"title": "resort b", "snippet": "steep runs", "url": "ub"},
        ]}}
        client = self.make_client(tmp_path, response)
        results = client.query({"q": "ski"}, 5)
        assert [(r.title, r.rank) for r in results] == [("resort a", 1), ("resort b", 2)]

    def test_field_map(self, tmp_path):
        response = {"data": {"items": [{"name": "n", "desc": "d", "link": "l"}]}}
        client = self.make_client(
            tmp_path, response, field_map={"title": "name", "snippet": "desc", "url": "link"}
        )
        result = client.query({"q": "ski"}, 1)[0]
        assert (result.title, result.snippet, result.url) == ("n", "d", "l")

    def test_unbound_param(self, tmp_path):
        client = self.make_client(tmp_path, {"data": {"items": []}})
        with pytest.raises(UnboundPlaceholder):
            client.query({}, 3)

    def test_unrecorded_request(self, tmp_path):
        client = self.make_client(tmp_path, {"data": {"items": []}})
        with pytest.raises(FixtureMiss):
            client.query({"q": "snowboard"}, 3)


class TestChunkConversion:
    def test_provenance_and_no_embedding(self, tmp_path):
        write_search_fixture(tmp_path, ["k"], THREE)
        results = FixtureSearchClient(tmp_path).search(["k"], 3)
        chunks = search_results_to_chunks(results, "web", "search_engine")
        assert all(c.embedding is None for c in chunks)
        assert all(c.source_kind == "search_engine" for c in chunks)
        assert [c.chunk_id for c in chunks] == ["web:r1", "web:r2", "web:r3"]
        assert chunks[0].source_uri == "u1"
