"""Conversation-context management: query enrichment for retrieval and
distilled history analysis for the final answer."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from . import prompts
from .llm import ChatModel, ChatRequest
from .model import ChatMessage, ConversationHistory

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContextAnalysis:
    """The two-field distillation handed to the summarizer."""

    analysis: str
    indices_of_related_messages: tuple[int, ...]
    related_messages: tuple[ChatMessage, ...]


def make_analysis(
    history: ConversationHistory, analysis_text: str, raw_indices: list[int]
) -> ContextAnalysis:
    """Build a valid ContextAnalysis from possibly dirty indices.

    Out-of-range entries are dropped with a warning; duplicates collapse;
    the result is strictly ascending with messages materialized in order.
    """
    n = len(history)
    kept: list[int] = []
    for idx in raw_indices:
        if isinstance(idx, bool) or not isinstance(idx, int):
            continue
        if 0 <= idx < n:
            kept.append(idx)
        else:
            log.warning("dropping out-of-range history index %r (history length %d)", idx, n)
    indices = tuple(sorted(set(kept)))
    return ContextAnalysis(
        analysis=analysis_text,
        indices_of_related_messages=indices,
        related_messages=tuple(history[i] for i in indices),
    )


def degraded_analysis(history: ConversationHistory) -> ContextAnalysis:
    """Parse failure falls back to the full history, never to nothing."""
    return make_analysis(history, "", list(range(len(history))))


def format_history(history: ConversationHistory) -> str:
    return "\n".join(f"{m.index}: {m.role}: {m.content}" for m in history)


async def rewrite_for_retrieval(query: str, history: ConversationHistory, llm: ChatModel) -> str:
    """Enrich the query with conversation context in a single generation.

    With an empty history the query passes through; on any backend failure
    or empty output the original query is returned.
    """
    if len(history) == 0:
        return query
    prompt = prompts.fill(prompts.CONVERSATION_REWRITE, history=format_history(history), query=query)
    try:
        out = await llm.chat(ChatRequest.from_prompt(prompt))
    except Exception:
        return query
    return out.strip() or query


_FENCED = re.compile(r"```(?:json)?\s*(\{.*?\})\s*```", re.DOTALL)


def parse_analysis_payload(text: str) -> tuple[str, list[int]] | None:
    """Extract the structured two-field payload, tolerating surrounding prose.

    Tries a fenced block first, then the first balanced-looking {...} span.
    Returns None when nothing parses to the expected shape.
    """
    candidates = [m.group(1) for m in _FENCED.finditer(text)]
    brace_start = text.find("{")
    if brace_start != -1:
        brace_end = text.rfind("}")
        if brace_end > brace_start:
            candidates.append(text[brace_start : brace_end + 1])
    for candidate in candidates:
        try:
            payload = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(payload, dict):
            continue
        analysis = payload.get("analysis", "")
        indices = payload.get("indices_of_related_messages", None)
        if not isinstance(analysis, str) or not isinstance(indices, list):
            continue
        return analysis, [i for i in indices if isinstance(i, int) and not isinstance(i, bool)]
    return None


async def analyze_context(
    query: str, history: ConversationHistory, llm: ChatModel
) -> ContextAnalysis:
    """Distill the history for the summarizer; never raises.

    Unparseable output degrades to the full history so the summarizer
    receives everything rather than nothing.
    """
    prompt = prompts.fill(prompts.CONTEXT_ANALYSIS, history=format_history(history), query=query)
    try:
        out = await llm.chat(ChatRequest.from_prompt(prompt))
    except Exception:
        return degraded_analysis(history)
    parsed = parse_analysis_payload(out)
    if parsed is None:
        return degraded_analysis(history)
    analysis_text, indices = parsed
    return make_analysis(history, analysis_text, indices)


def extract_related(history: ConversationHistory, indices: list[int]) -> list[ChatMessage]:
    """Order-preserving selection of history messages by index."""
    n = len(history)
    for idx in indices:
        if not (0 <= idx < n):
            raise IndexError(f"history index {idx} out of range (length {n})")
    return [history[i] for i in indices]
