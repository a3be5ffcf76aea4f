"""Config validation: defaults, violations, idempotence, round-trip."""

import json

import pytest

from ragmux.config import load_config, validate_config
from ragmux.errors import ConfigError

from .conftest import CONFIG_DIR


def base_raw(tmp_path):
    corpus = tmp_path / "docs"
    corpus.mkdir(exist_ok=True)
    (corpus / "a.md").write_text("hello world", encoding="utf-8")
    return {
        "llm": {"backend": "mock"},
        "knowledge_sources": [
            {"id": "docs", "kind": "vdb", "paths": [str(corpus)]},
        ],
        "agents": [
            {"id": "a", "sources": ["docs"]},
            {"id": "b", "sources": ["docs"]},
        ],
    }


def codes(excinfo) -> set[str]:
    return {v.code for v in excinfo.value.violations}


class TestViolations:
    def test_unknown_source_reference(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["sources"] = ["docs", "nope"]
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "UnknownSourceReference" in codes(excinfo)
        assert any("nope" in v.message for v in excinfo.value.violations)

    def test_duplicate_agent_id(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][1]["id"] = "a"
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "DuplicateAgentId" in codes(excinfo)

    def test_mixin_weight_out_of_range(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["mixin"] = ["something"]
        raw["agents"][0]["mixin_weight"] = 1.3
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "InvalidRange" in codes(excinfo)
        assert any("mixin_weight" in v.field for v in excinfo.value.violations)

    def test_scale_must_be_positive(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["scale"] = 0
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert any("scale" in v.field for v in excinfo.value.violations)

    def test_router_k_bound(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["router"] = {"k": 0}
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert any("router.k" in v.field for v in excinfo.value.violations)

    def test_template_requires_query_placeholder(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["rewrite"] = [{"kind": "prompt", "template": "no placeholder"}]
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "InvalidTemplate" in codes(excinfo)

    def test_keyword_must_be_terminal(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["rewrite"] = [{"kind": "keyword"}, {"kind": "prompt"}]
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "InvalidChain" in codes(excinfo)

    def test_translation_requires_target_language(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["rewrite"] = [{"kind": "translation"}]
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "InvalidStrategy" in codes(excinfo)

    def test_search_agent_needs_keyword_chain(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["knowledge_sources"].append(
            {"id": "web", "kind": "search_engine", "fixture_dir": str(tmp_path)}
        )
        raw["agents"][0]["sources"] = ["web"]
        raw["agents"][0]["mixin"] = ["web topics"]
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "InvalidChain" in codes(excinfo)

    def test_online_only_agent_requires_mixin(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["knowledge_sources"].append(
            {"id": "web", "kind": "search_engine", "fixture_dir": str(tmp_path)}
        )
        raw["agents"][0]["sources"] = ["web"]
        raw["agents"][0]["rewrite"] = [{"kind": "keyword"}]
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "MissingMixin" in codes(excinfo)

    def test_all_violations_reported_together(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["sources"] = ["nope"]
        raw["agents"][1]["id"] = "a"
        raw["router"] = {"k": -2}
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert {"UnknownSourceReference", "DuplicateAgentId", "InvalidRange"} <= codes(excinfo)


class TestDefaults:
    def test_router_k_defaults_to_2(self, tmp_path):
        cfg = validate_config(base_raw(tmp_path))
        assert cfg.router.k == 2

    def test_router_enabled_iff_two_agents(self, tmp_path):
        cfg = validate_config(base_raw(tmp_path))
        assert cfg.router.enabled is True
        raw = base_raw(tmp_path)
        raw["agents"] = raw["agents"][:1]
        assert validate_config(raw).router.enabled is False

    def test_global_defaults(self, tmp_path):
        cfg = validate_config(base_raw(tmp_path))
        assert cfg.summarizer.chunk_budget == 8
        assert cfg.pipeline.context_manager is True
        assert cfg.router.seed == 42
        assert cfg.llm.embedding_dim == 64

    def test_weight_forced_to_zero_without_mixin(self, tmp_path):
        cfg = validate_config(base_raw(tmp_path))
        assert cfg.agents[0].mixin_weight == 0.0

    def test_weight_forced_to_one_for_online_only(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["knowledge_sources"].append(
            {"id": "web", "kind": "search_engine", "fixture_dir": str(tmp_path)}
        )
        raw["agents"][0] = {
            "id": "a",
            "sources": ["web"],
            "rewrite": [{"kind": "keyword"}],
            "mixin": ["sports results"],
            "mixin_weight": 0.3,
        }
        cfg = validate_config(raw)
        assert cfg.agent("a").mixin_weight == 1.0

    def test_default_weight_with_both_sides(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["mixin"] = ["docs about the framework"]
        cfg = validate_config(raw)
        assert cfg.agent("a").mixin_weight == 0.5


class TestRoundTrip:
    def test_serialize_parse_identity(self, tmp_path):
        cfg = validate_config(base_raw(tmp_path))
        again = validate_config(json.loads(json.dumps(cfg.to_raw())))
        assert again == cfg

    def test_validation_idempotent(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["mixin"] = ["x"]
        raw["agents"][1]["rewrite"] = [{"kind": "keyword"}]
        cfg = validate_config(raw)
        assert validate_config(cfg.to_raw()) == cfg


class TestShippedConfigs:
    @pytest.mark.parametrize("name", ["agentscope-qa", "modelscope-qa", "olympic-bot"])
    def test_example_config_validates(self, name):
        cfg = load_config(CONFIG_DIR / f"{name}.yaml")
        assert cfg.agents

    def test_table_shapes(self):
        agentscope = load_config(CONFIG_DIR / "agentscope-qa.yaml")
        assert agentscope.pipeline.context_manager and agentscope.router.enabled
        assert len(agentscope.knowledge_sources) == 5
        modelscope = load_config(CONFIG_DIR / "modelscope-qa.yaml")
        assert any(s.kind == "search_engine" for s in modelscope.knowledge_sources)
        assert any(a.mixin and a.scale > 1 for a in modelscope.agents)
        olympic = load_config(CONFIG_DIR / "olympic-bot.yaml")
        assert not olympic.pipeline.context_manager and not olympic.router.enabled
        assert len(olympic.agents) == 1


class TestTemplateFile:
    def test_template_loaded_from_file(self, tmp_path):
        tfile = tmp_path / "custom.txt"
        tfile.write_text("CUSTOM TEMPLATE {query}", encoding="utf-8")
        raw = base_raw(tmp_path)
        raw["agents"][0]["rewrite"] = [{"kind": "prompt", "template_file": str(tfile)}]
        cfg = validate_config(raw)
        assert cfg.agents[0].rewrite[0].template == "CUSTOM TEMPLATE {query}"

    def test_missing_template_file(self, tmp_path):
        raw = base_raw(tmp_path)
        raw["agents"][0]["rewrite"] = [{"kind": "prompt",
                                        "template_file": str(tmp_path / "absent.txt")}]
        with pytest.raises(ConfigError) as excinfo:
            validate_config(raw)
        assert "UnreadablePath" in codes(excinfo)
