"""Document chunking policies."""

from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class ChunkingPolicy:
    max_chunk_chars: int
    overlap_chars: int = 0
    split_preference: str = "fixed"  # paragraph | line | fixed

    def __post_init__(self) -> None:
        if self.max_chunk_chars < 1:
            raise ValueError("max_chunk_chars must be >= 1")
        if not (0 <= self.overlap_chars < self.max_chunk_chars):
            raise ValueError("overlap_chars must satisfy 0 <= overlap < max_chunk_chars")


_BLANK_LINE = re.compile(r"\n[ \t]*\n")


def _slide_fixed(text: str, max_chars: int, overlap: int) -> list[str]:
    # Window advances by max - overlap; consecutive chunks share exactly
    # `overlap` chars; stops once the window reaches the end of the text.
    step = max_chars - overlap
    chunks: list[str] = []
    start = 0
    while True:
        end = min(start + max_chars, len(text))
        chunks.append(text[start:end])
        if end >= len(text):
            return chunks
        start += step


def chunk_document(text: str, policy: ChunkingPolicy) -> list[str]:
    """Split a document into ordered chunks, each <= max_chunk_chars.

    paragraph mode splits at blank lines first and line mode packs whole
    lines; blocks that still exceed the cap fall back to the fixed slide.
    """
    if not text:
        raise ValueError("cannot chunk empty text")
    if len(text) <= policy.max_chunk_chars and policy.split_preference == "fixed":
        return [text]

    if policy.split_preference == "fixed":
        return _slide_fixed(text, policy.max_chunk_chars, policy.overlap_chars)

    if policy.split_preference == "paragraph":
        blocks = [b.strip() for b in _BLANK_LINE.split(text)]
        blocks = [b for b in blocks if b]
    else:  # line: pack consecutive whole lines up to the cap
        blocks = []
        current: list[str] = []
        length = 0
        for line in text.split("\n"):
            extra = len(line) + (1 if current else 0)
            if current and length + extra > policy.max_chunk_chars:
                blocks.append("\n".join(current))
                current, length = [], 0
                extra = len(line)
            current.append(line)
            length += extra
        if current:
            blocks.append("\n".join(current))
        blocks = [b for b in blocks if b.strip()]

    if not blocks:
        blocks = [text.strip() or text]

    chunks: list[str] = []
    for block in blocks:
        if len(block) <= policy.max_chunk_chars:
            chunks.append(block)
        else:
            chunks.extend(_slide_fixed(block, policy.max_chunk_chars, policy.overlap_chars))
    return chunks
