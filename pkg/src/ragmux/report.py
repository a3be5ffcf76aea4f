"""Render turn traces into latency figures and a delimited summary.

Input is the JSONL trace log written by `chat --trace-out` or
`serve --trace-out` (one trace record per turn). Output: summary.csv plus
PNG figures showing per-stage latency and the distribution of totals.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

STAGE_FIELDS = ("stage1_ms", "stage2_ms", "final_ms")

CSV_COLUMNS = (
    "turn_id",
    "stage1_ms",
    "stage2_ms",
    "final_ms",
    "total_ms",
    "llm_calls",
    "presented_chunks",
    "dropped_chunks",
    "activated_agents",
    "failed",
)


def load_traces(path: str | Path) -> list[dict[str, Any]]:
    traces = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            traces.append(json.loads(line))
    return traces


def write_summary_csv(traces: list[dict[str, Any]], out_path: str | Path) -> Path:
    out_path = Path(out_path)
    with out_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for t in traces:
            writer.writerow(
                [
                    t.get("turn_id", ""),
                    f"{t.get('stage1_ms', 0.0):.3f}",
                    f"{t.get('stage2_ms', 0.0):.3f}",
                    f"{t.get('final_ms', 0.0):.3f}",
                    f"{t.get('total_ms', 0.0):.3f}",
                    t.get("llm_calls", 0),
                    t.get("presented_chunks", 0),
                    t.get("dropped_chunks", 0),
                    ";".join(t.get("activated_agents", [])),
                    t.get("failed", False),
                ]
            )
    return out_path


def render_stage_figure(traces: list[dict[str, Any]], out_path: str | Path) -> Path:
    """Stacked per-turn bars: stage 1, stage 2, and final summarization."""
    out_path = Path(out_path)
    xs = range(1, len(traces) + 1)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.5 * len(traces) + 2), 4.0))
    bottom = [0.0] * len(traces)
    for stage in STAGE_FIELDS:
        values = [float(t.get(stage, 0.0)) for t in traces]
        ax.bar(xs, values, bottom=bottom, label=stage.replace("_ms", ""))
        bottom = [b + v for b, v in zip(bottom, values)]
    ax.set_xlabel("turn")
    ax.set_ylabel("latency (ms)")
    ax.set_title("Per-turn stage latency")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def render_total_histogram(traces: list[dict[str, Any]], out_path: str | Path) -> Path:
    out_path = Path(out_path)
    totals = [float(t.get("total_ms", 0.0)) for t in traces]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.hist(totals, bins=min(20, max(5, len(totals))), edgecolor="black")
    ax.set_xlabel("turn total (ms)")
    ax.set_ylabel("turns")
    ax.set_title("End-to-end latency distribution")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def render_report(trace_path: str | Path, out_dir: str | Path) -> dict[str, Path]:
    """Write summary.csv, stage_latency.png, and total_histogram.png."""
    traces = load_traces(trace_path)
    if not traces:
        raise ValueError(f"no traces found in {trace_path}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return {
        "summary": write_summary_csv(traces, out_dir / "summary.csv"),
        "stage_figure": render_stage_figure(traces, out_dir / "stage_latency.png"),
        "histogram": render_total_histogram(traces, out_dir / "total_histogram.png"),
    }
