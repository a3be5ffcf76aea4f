"""Chunking policy behavior."""

import pytest
from hypothesis import given, strategies as st

from ragmux.chunking import ChunkingPolicy, chunk_document


class TestPolicy:
    def test_overlap_must_be_smaller(self):
        with pytest.raises(ValueError):
            ChunkingPolicy(max_chunk_chars=4, overlap_chars=4)


class TestFixed:
    def test_short_text_single_chunk(self):
        policy = ChunkingPolicy(max_chunk_chars=100)
        assert chunk_document("short text", policy) == ["short text"]

    def test_hand_slid_window(self):
        policy = ChunkingPolicy(max_chunk_chars=4, overlap_chars=1, split_preference="fixed")
        assert chunk_document("abcdefghij", policy) == ["abcd", "defg", "ghij"]

    def test_consecutive_overlap_exact(self):
        policy = ChunkingPolicy(max_chunk_chars=5, overlap_chars=2, split_preference="fixed")
        chunks = chunk_document("abcdefghijk", policy)
        for prev, nxt in zip(chunks, chunks[1:]):
            assert prev[-2:] == nxt[:2]

    @given(
        text=st.text(alphabet="abcxyz ", min_size=1, max_size=200),
        max_chars=st.integers(min_value=2, max_value=30),
        overlap=st.integers(min_value=0, max_value=29),
    )
    def test_fixed_covers_document_in_order(self, text, max_chars, overlap):
        if overlap >= max_chars:
            overlap = max_chars - 1
        policy = ChunkingPolicy(max_chunk_chars=max_chars, overlap_chars=overlap,
                                split_preference="fixed")
        chunks = chunk_document(text, policy)
        assert all(len(c) <= max_chars for c in chunks)
        # Stitch the slide back together: drop each successor's overlap.
        rebuilt = chunks[0] + "".join(c[overlap:] if len(c) > overlap else "" for c in chunks[1:])
        # The final window may re-cover already-seen text when it hits the end.
        assert rebuilt.startswith(text) or text.startswith(rebuilt[: len(text)])
        assert chunks[-1] == text[-len(chunks[-1]):]


class TestParagraph:
    def test_splits_at_blank_line(self):
        policy = ChunkingPolicy(max_chunk_chars=100, split_preference="paragraph")
        text = "first paragraph here\n\nsecond paragraph here"
        assert chunk_document(text, policy) == ["first paragraph here", "second paragraph here"]

    def test_oversized_paragraph_falls_back_to_fixed(self):
        policy = ChunkingPolicy(max_chunk_chars=10, overlap_chars=0, split_preference="paragraph")
        text = "tiny\n\n" + "x" * 25
        chunks = chunk_document(text, policy)
        assert chunks[0] == "tiny"
        assert "".join(chunks[1:]) == "x" * 25
        assert all(len(c) <= 10 for c in chunks)


class TestLine:
    def test_packs_whole_lines(self):
        policy = ChunkingPolicy(max_chunk_chars=12, split_preference="line")
        chunks = chunk_document("aaaa\nbbbb\ncccc\ndddd", policy)
        assert chunks == ["aaaa\nbbbb", "cccc\ndddd"]
        assert all(len(c) <= 12 for c in chunks)


def test_empty_text_rejected():
    with pytest.raises(ValueError):
        chunk_document("", ChunkingPolicy(max_chunk_chars=10))
