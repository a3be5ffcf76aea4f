"""Rewrite strategies: scripted outputs, fallbacks, chains, the registry."""

import pytest

from ragmux.config import StrategyConfig
from ragmux.errors import EmptyKeywords
from ragmux.llm import HashEmbedder, MockRule
from ragmux.prompts import (
    HYDE_REWRITE_DEFAULT,
    KEYWORD_REWRITE_DEFAULT,
    PROMPT_REWRITE_DEFAULT,
    RETRIEVAL_REWRITE_DEFAULT,
    TRANSLATION_REWRITE_DEFAULT,
)
from ragmux.rewrite import (
    RewriteDeps,
    apply_chain,
    hyde_rewrite,
    keyword_rewrite,
    parse_keywords,
    prompt_rewrite,
    retrieval_rewrite,
    translation_rewrite,
)

from .conftest import make_chunk, mock_model, run, store_of


def strat(kind, **kw):
    defaults = {
        "prompt": PROMPT_REWRITE_DEFAULT,
        "retrieval": RETRIEVAL_REWRITE_DEFAULT,
        "keyword": KEYWORD_REWRITE_DEFAULT,
        "hyde": HYDE_REWRITE_DEFAULT,
        "translation": TRANSLATION_REWRITE_DEFAULT,
        "custom": "{query}",
    }
    return StrategyConfig(kind=kind, template=kw.pop("template", defaults[kind]), **kw)


class TestPromptRewrite:
    def test_scripted_output(self):
        llm = mock_model([MockRule("Question: raw q", "rewritten-q")])
        assert run(prompt_rewrite("raw q", strat("prompt"), llm)) == "rewritten-q"

    def test_empty_output_falls_back(self):
        llm = mock_model(default="")
        assert run(prompt_rewrite("raw q", strat("prompt"), llm)) == "raw q"


class TestRetrievalRewrite:
    def test_context_filled_from_store(self):
        store = store_of(make_chunk("c1", "agentflow msghub docs", embedding=[1, 0]))
        llm = mock_model(default="better q")
        embedder = HashEmbedder(dim=2)
        run(retrieval_rewrite("msghub", strat("retrieval"), store, llm, embedder))
        prompt = llm.log.calls[0].prompt
        assert "agentflow msghub docs" in prompt

    def test_top_n_chunks_in_prompt(self):
        # The two hybrid-top chunks for the query must appear, the third not.
        store = store_of(
            make_chunk("c1", "msghub broadcast", embedding=[1, 0]),
            make_chunk("c2", "msghub context", embedding=[0.9, 0.1]),
            make_chunk("c3", "weather api", embedding=[0, 1]),
        )
        embedder = HashEmbedder(dim=2)
        llm = mock_model(default="out")
        qvec = embedder.embed(["msghub"])[0]
        expected = {c.chunk_id for c, _ in store.hybrid_search("msghub", qvec, 2)}
        run(retrieval_rewrite("msghub", strat("retrieval", n_context_chunks=2), store, llm, embedder))
        prompt = llm.log.calls[0].prompt
        included = {cid for cid in ["c1", "c2", "c3"] if store.get(cid).text in prompt}
        assert included == expected

    def test_empty_output_falls_back(self):
        store = store_of(make_chunk("c1", "text", embedding=[1, 0]))
        llm = mock_model(default="")
        out = run(retrieval_rewrite("q terms", strat("retrieval"), store, llm, HashEmbedder(dim=2)))
        assert out == "q terms"


class TestKeywordRewrite:
    def test_comma_separated(self):
        llm = mock_model(default="olympics, 100m final")
        out = run(keyword_rewrite("who won", strat("keyword"), llm))
        assert out == ["olympics", "100m final"]

    def test_trim_and_dedup_by_hand(self):
        # "a,\n a ,b" -> trim -> ["a", "", "a", "b"] -> drop empty, dedup -> ["a", "b"]
        llm = mock_model(default="a,\n a ,b")
        assert run(keyword_rewrite("q", strat("keyword"), llm)) == ["a", "b"]

    def test_empty_output_raises(self):
        llm = mock_model(default="")
        with pytest.raises(EmptyKeywords):
            run(keyword_rewrite("q", strat("keyword"), llm))

    def test_parse_idempotent(self):
        parsed = parse_keywords("One, two,TWO\nthree")
        assert parse_keywords(", ".join(parsed)) == parsed

    def test_case_insensitive_dedup_keeps_first(self):
        assert parse_keywords("Relay, relay, RELAY, final") == ["Relay", "final"]


class TestHydeRewrite:
    def test_paragraph_passthrough(self):
        paragraph = "Werewolf is a multi-agent game example shipped with the framework."
        llm = mock_model(default=paragraph)
        assert run(hyde_rewrite("what is werewolf", strat("hyde"), llm)) == paragraph

    def test_downstream_search_uses_paragraph_embedding(self):
        embedder = HashEmbedder(dim=16)
        texts = {"c1": "werewolf game example agents", "c2": "completely different words"}
        store = store_of(
            *[make_chunk(cid, text, embedding=embedder.embed([text])[0])
              for cid, text in texts.items()]
        )
        paragraph = "werewolf game example agents"
        pvec = embedder.embed([paragraph])[0]
        hits = store.hybrid_search(paragraph, pvec, 1)
        assert hits[0][0].chunk_id == "c1"

    def test_empty_falls_back(self):
        llm = mock_model(default="")
        assert run(hyde_rewrite("q", strat("hyde"), llm)) == "q"


class TestTranslationRewrite:
    def test_scripted_translation(self):
        llm = mock_model(default="如何使用msghub")
        out = run(translation_rewrite(
            "how to use msghub", strat("translation", target_language="Chinese"), llm
        ))
        assert out == "如何使用msghub"

    def test_prompt_embeds_language_and_query(self):
        llm = mock_model(default="x")
        run(translation_rewrite("my query", strat("translation", target_language="French"), llm))
        prompt = llm.log.calls[0].prompt
        assert "French" in prompt and "my query" in prompt

    def test_same_language_short_circuits(self):
        llm = mock_model(default="should not be used")
        out = run(translation_rewrite(
            "q", strat("translation", target_language="en", source_language="en"), llm
        ))
        assert out == "q"
        assert len(llm.log) == 0

    def test_empty_falls_back(self):
        llm = mock_model(default="")
        out = run(translation_rewrite("q", strat("translation", target_language="de"), llm))
        assert out == "q"


class TestChain:
    def test_empty_chain_is_identity(self):
        deps = RewriteDeps(llm=mock_model(default="x"))
        assert run(apply_chain("original", [], deps)) == "original"

    def test_prompt_then_keyword_composition(self):
        llm = mock_model([
            MockRule("Question: raw\n\nRewritten:", "expanded question"),
            MockRule("Question: expanded question\n\nKeywords:", "kw1, kw2"),
        ])
        deps = RewriteDeps(llm=llm)
        out = run(apply_chain("raw", [strat("prompt"), strat("keyword")], deps))
        assert out == ["kw1", "kw2"]
        # Mock capture: the keyword prompt consumed the prompt-rewrite output.
        assert "expanded question" in llm.log.calls[1].prompt

    def test_split_chains_compose(self):
        llm = mock_model([
            MockRule("Question: s0\n\nRewritten:", "s1"),
            MockRule("Question: s1\n\nParagraph:", "s2"),
        ])
        deps = RewriteDeps(llm=llm)
        chain = [strat("prompt"), strat("hyde")]
        whole = run(apply_chain("s0", chain, deps))
        first = run(apply_chain("s0", chain[:1], deps))
        split = run(apply_chain(first, chain[1:], deps))
        assert whole == split == "s2"

    def test_custom_strategy_registry(self):
        deps = RewriteDeps(llm=mock_model(default=""))

        async def shouty(q):
            return q.upper()

        deps.registry.register("shout", shouty)
        out = run(apply_chain("quiet", [strat("custom", name="shout")], deps))
        assert out == "QUIET"

    def test_degrades_to_original_never_empty(self):
        llm = mock_model([MockRule("Question: q", "", )], default="")
        deps = RewriteDeps(llm=llm, embedder=HashEmbedder(dim=2),
                           store=store_of(make_chunk("c", "t", embedding=[1, 0])))
        for chain in ([strat("prompt")], [strat("hyde")], [strat("retrieval")],
                      [strat("translation", target_language="fr")]):
            out = run(apply_chain("q", chain, deps))
            assert out == "q"
