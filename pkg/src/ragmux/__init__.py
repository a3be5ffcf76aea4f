"""ragmux: a configurable multi-source QA engine.

Retrieval agents sit behind an embedding-cluster router; a context manager
enriches queries from conversation history; the summarizer rerank-filters
pooled results, streams the answer, and generates citations by looking
back at what was presented.
"""

from .config import EngineConfig, load_config, validate_config
from .errors import ConfigError
from .llm import HashEmbedder, MockChatModel, MockRule, MockScript
from .model import ChatMessage, ConversationHistory, KnowledgeChunk, Query, history_window
from .pipeline import Engine, Session, TurnTrace, new_session
from .service import create_app
from .summarize import Citation, RerankedContext

__version__ = "0.1.0"

__all__ = [
    "ChatMessage",
    "Citation",
    "ConfigError",
    "ConversationHistory",
    "Engine",
    "EngineConfig",
    "HashEmbedder",
    "KnowledgeChunk",
    "MockChatModel",
    "MockRule",
    "MockScript",
    "Query",
    "RerankedContext",
    "Session",
    "TurnTrace",
    "create_app",
    "history_window",
    "load_config",
    "new_session",
    "validate_config",
    "__version__",
]
