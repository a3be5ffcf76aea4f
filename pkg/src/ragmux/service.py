"""Streaming HTTP facade: sessions, the chat event stream, and operator
endpoints.

The wire protocol is a server-sent-events-style text stream:
each frame is `event: <kind>` + `data: <json>` + a blank line, with kinds
meta, token, citations, error, done. A request yields exactly one meta,
any number of tokens, exactly one citations (or one error), and exactly
one terminal done; nothing follows done.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .pipeline import Engine, Session, new_session


def sse_frame(event: str, data: dict[str, Any]) -> str:
    return f"event: {event}\ndata: {json.dumps(data, sort_keys=True)}\n\n"


class SessionStore:
    """In-memory sessions with a per-session turn lock and optional
    append-only transcript persistence."""

    def __init__(self, persist_dir: Optional[str | Path] = None):
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, asyncio.Lock] = {}
        self.persist_dir = Path(persist_dir) if persist_dir else None
        if self.persist_dir:
            self.persist_dir.mkdir(parents=True, exist_ok=True)

    def get(self, session_id: str) -> Optional[Session]:
        return self.sessions.get(session_id)

    def get_or_create(self, session_id: Optional[str]) -> Session:
        if session_id and session_id in self.sessions:
            return self.sessions[session_id]
        session = new_session(session_id)
        self.sessions[session.session_id] = session
        self.locks[session.session_id] = asyncio.Lock()
        return session

    def lock(self, session_id: str) -> asyncio.Lock:
        return self.locks.setdefault(session_id, asyncio.Lock())

    def persist_turn(self, session: Session) -> None:
        if not self.persist_dir:
            return
        path = self.persist_dir / f"{session.session_id}.jsonl"
        with path.open("a", encoding="utf-8") as fh:
            for message in session.history.messages[-2:]:
                fh.write(json.dumps(message.to_dict(), sort_keys=True) + "\n")


def create_app(
    engine: Engine,
    strict_sessions: bool = False,
    persist_dir: Optional[str | Path] = None,
) -> FastAPI:
    app = FastAPI(title="ragmux", version="0.1.0")
    # The chat UI is served separately (no build-time coupling); let it in.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(persist_dir)
    app.state.engine = engine
    app.state.sessions = store

    @app.get("/v1/health")
    async def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.get("/v1/sources")
    async def sources() -> dict[str, Any]:
        return {"sources": engine.source_stats()}

    @app.get("/v1/sessions/{session_id}")
    async def transcript(session_id: str):
        session = store.get(session_id)
        if session is None:
            return JSONResponse({"error": "SessionNotFound", "session_id": session_id}, status_code=404)
        return {"session_id": session_id, "messages": session.history.to_dicts()}

    @app.get("/v1/sessions")
    async def sessions() -> dict[str, Any]:
        return {
            "sessions": [
                {"session_id": s.session_id, "messages": len(s.history)}
                for s in store.sessions.values()
            ]
        }

    @app.post("/v1/reindex")
    async def reindex() -> dict[str, Any]:
        stats = engine.rebuild()
        return {"status": "ok", "sources": [
            {"source_id": s.source_id, "chunks": s.chunk_count} for s in stats
        ]}

    @app.post("/v1/chat")
    async def chat(request: Request):
        body = await request.json()
        message = body.get("message", "")
        session_id = body.get("session_id")

        async def error_stream(code: str, detail: str):
            yield sse_frame("error", {"code": code, "message": detail})
            yield sse_frame("done", {"trace": None})

        if not isinstance(message, str) or not message.strip():
            return StreamingResponse(
                error_stream("EmptyMessage", "message must be non-empty"),
                media_type="text/event-stream",
            )
        if strict_sessions and session_id and store.get(session_id) is None:
            return StreamingResponse(
                error_stream("SessionNotFound", f"unknown session {session_id!r}"),
                media_type="text/event-stream",
            )
        session = store.get_or_create(session_id)

        async def stream():
            async with store.lock(session.session_id):
                before = len(session.history)
                async for event in engine.run_turn(session, message):
                    yield sse_frame(event["event"], event["data"])
                if len(session.history) > before:
                    store.persist_turn(session)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def parse_sse_stream(text: str) -> list[dict[str, Any]]:
    """Parse an SSE body back into [{event, data}] frames (test/CLI helper)."""
    frames = []
    for block in text.split("\n\n"):
        if not block.strip():
            continue
        event = None
        data_lines = []
        for line in block.splitlines():
            if line.startswith("event:"):
                event = line[len("event:"):].strip()
            elif line.startswith("data:"):
                data_lines.append(line[len("data:"):].strip())
        if event is not None:
            frames.append({"event": event, "data": json.loads("\n".join(data_lines) or "null")})
    return frames


def check_event_grammar(frames: list[dict[str, Any]]) -> list[str]:
    """Validate protocol order; returns a list of violations (empty = ok).

    Grammar: meta token* (citations | error) done  — with error allowed to
    pre-empt meta for requests rejected before the turn starts.
    """
    violations: list[str] = []
    kinds = [f["event"] for f in frames]
    if not kinds:
        return ["empty stream"]
    if kinds.count("done") != 1:
        violations.append(f"expected exactly one done, got {kinds.count('done')}")
    if kinds and kinds[-1] != "done":
        violations.append("done must be the final event")
    if "done" in kinds and kinds.index("done") != len(kinds) - 1:
        violations.append("events after done")
    has_error = "error" in kinds
    if kinds.count("meta") > 1:
        violations.append("more than one meta")
    if not has_error and kinds.count("meta") != 1:
        violations.append("missing meta on a successful stream")
    if kinds and kinds[0] not in ("meta", "error"):
        violations.append(f"stream must open with meta (or error), got {kinds[0]}")
    if has_error:
        if "citations" in kinds and kinds.index("citations") > kinds.index("error"):
            violations.append("citations after error")
    else:
        if kinds.count("citations") != 1:
            violations.append(f"expected exactly one citations, got {kinds.count('citations')}")
        else:
            cit = kinds.index("citations")
            if any(k == "token" for k in kinds[cit:]):
                violations.append("token after citations")
    return violations
