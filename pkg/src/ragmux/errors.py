"""Exception types shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Violation:
    """One config validation failure: a stable code plus a human message."""

    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.field}: {self.message}"


class ConfigError(Exception):
    """Raised by validate_config; carries the full list of violations."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class BackendUnavailable(Exception):
    """The chat/embedding backend could not be reached."""


class Timeout(Exception):
    """A backend call exceeded its deadline."""


class StreamInterrupted(Exception):
    """A token stream broke mid-answer; partial text is preserved."""

    def __init__(self, partial_text: str, message: str = "stream interrupted"):
        self.partial_text = partial_text
        super().__init__(message)


class EmbeddingFailed(Exception):
    """Embedding input was empty or the embedding backend failed."""


class UnreadablePath(Exception):
    """An ingestion path does not exist or cannot be read."""


class FixtureMiss(Exception):
    """No recorded fixture for this query (fixture-mode clients)."""


class NetworkError(Exception):
    """Live-mode client failed to reach its endpoint."""


class UnboundPlaceholder(Exception):
    """An endpoint template placeholder has no value in params."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound placeholder: {name}")


class ParsePathMiss(Exception):
    """The configured response path does not exist in the response."""


class KTooLarge(Exception):
    """Requested more clusters than there are points."""


class EmptyKeywords(Exception):
    """Keyword rewrite produced nothing parseable."""


class TurnFailed(Exception):
    """The turn could not produce an answer (total LLM unavailability)."""


class SessionNotFound(Exception):
    """Strict-mode chat request referenced an unknown session."""
