"""Default prompt templates and the placeholder-fill helper.

Templates use {name} placeholders. fill() substitutes literally, so braces
inside user queries or retrieved text never break formatting.
"""

from __future__ import annotations

from pathlib import Path


def fill(template: str, **values: str) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def load_template(path: str | Path) -> str:
    return Path(path).read_text(encoding="utf-8")


CONVERSATION_REWRITE = """\
You clarify user questions for a retrieval system.
Rewrite the latest question so it is self-contained: resolve pronouns and
references using the conversation, restore omitted keywords, and if the user
is rephrasing an earlier question because the answer was unsatisfactory,
reflect that in the rewrite. Output only the rewritten question.

Conversation so far:
{history}

Latest question: {query}

Rewritten question:"""


CONTEXT_ANALYSIS = """\
You analyze how a conversation relates to the latest question.
Reply with a fenced JSON block containing exactly two fields:
"analysis" (a short free-form relation of the history to the question) and
"indices_of_related_messages" (the zero-based indices of history messages
that matter for answering).

Conversation (each line is "index: role: content"):
{history}

Latest question: {query}

```json
"""


PROMPT_REWRITE_DEFAULT = """\
Rewrite the following question so it retrieves well from a technical
knowledge base: expand abbreviations and add the implied subject terms.
Output only the rewritten question.

Question: {query}

Rewritten:"""


RETRIEVAL_REWRITE_DEFAULT = """\
Using the reference material below, rewrite the question with more precise
terminology so it retrieves better. Output only the rewritten question.

Reference material:
{context}

Question: {query}

Rewritten:"""


KEYWORD_REWRITE_DEFAULT = """\
Extract the best search-engine keywords from this question.
Output only the keywords, comma-separated.

Question: {query}

Keywords:"""


HYDE_REWRITE_DEFAULT = """\
Write one short paragraph that plausibly answers the question below, using
your own knowledge. Output only the paragraph.

Question: {query}

Paragraph:"""


TRANSLATION_REWRITE_DEFAULT = """\
Translate the question into {target_language}, keeping technical terms
intact. Output only the translated question.

Question: {query}

Translation:"""


DIGEST = """\
You compress retrieved material for a question-answering system.
Given the question and the numbered fragments, reply with a fenced JSON
block: {"summary": "<key information answering the question>",
"supporting_ids": ["<chunk id>", ...]} listing only fragments you used.

Question: {query}

Fragments:
{items}

```json
"""


ANSWER_SYSTEM = """\
You are a careful assistant that answers using the numbered knowledge
fragments provided. Ground every claim in the fragments when they are
relevant; be direct and concise."""


ANSWER_NO_KNOWLEDGE = """\
No knowledge fragments were retrieved for this question. Answer from the
conversation alone, and say explicitly that no supporting sources were
found."""


ANSWER_USER = """\
{context_block}

{knowledge_block}

Question: {query}

Answer:"""


CITATION = """\
An answer was just generated from the numbered knowledge fragments below.
List the numbers of the fragments that were actually used in the answer,
as a JSON array (for example [1, 3]). If none were used, reply [].

Fragments:
{items}

Answer:
{answer}

Used fragment numbers:"""
