"""Trace report rendering: CSV summary plus figure files."""

import csv
import json

import pytest

from ragmux.report import load_traces, render_report, write_summary_csv

TRACE = {
    "turn_id": "s:1",
    "query": "q",
    "enriched_query": "q",
    "activated_agents": ["a", "b"],
    "agent_scores": {"a": 0.9, "b": 0.4},
    "rewritten_queries": {"a": "q"},
    "chunk_counts": {"a": 3, "b": 1},
    "presented_chunks": 4,
    "dropped_chunks": 0,
    "context_manager_enabled": True,
    "routing_enabled": True,
    "llm_calls": 6,
    "error_notes": [],
    "stage1_ms": 120.5,
    "stage2_ms": 310.0,
    "final_ms": 42.25,
    "total_ms": 472.75,
    "failed": False,
}


def write_trace_log(tmp_path, n=4):
    path = tmp_path / "traces.jsonl"
    with path.open("w") as fh:
        for i in range(n):
            record = dict(TRACE, turn_id=f"s:{i}", total_ms=TRACE["total_ms"] + i)
            fh.write(json.dumps(record) + "\n")
    return path


class TestReport:
    def test_render_produces_csv_and_figures(self, tmp_path):
        trace_path = write_trace_log(tmp_path)
        outputs = render_report(trace_path, tmp_path / "out")
        assert outputs["summary"].exists()
        assert outputs["stage_figure"].exists()
        assert outputs["histogram"].exists()
        assert outputs["stage_figure"].suffix == ".png"
        assert outputs["stage_figure"].stat().st_size > 0

    def test_csv_contents(self, tmp_path):
        trace_path = write_trace_log(tmp_path, n=3)
        out = write_summary_csv(load_traces(trace_path), tmp_path / "summary.csv")
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        assert rows[0]["turn_id"] == "s:0"
        assert float(rows[0]["stage1_ms"]) == pytest.approx(120.5)
        assert rows[0]["activated_agents"] == "a;b"

    def test_empty_log_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(ValueError):
            render_report(path, tmp_path / "out")

    def test_load_traces_skips_blank_lines(self, tmp_path):
        path = tmp_path / "t.jsonl"
        path.write_text(json.dumps(TRACE) + "\n\n" + json.dumps(TRACE) + "\n")
        assert len(load_traces(path)) == 2
