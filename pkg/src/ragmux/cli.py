"""Operator CLI: serve, ingest, chat (terminal REPL), route, report."""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import Optional

from .config import EngineConfig, load_config
from .errors import ConfigError
from .ingest import ingest_with_cache
from .llm import HashEmbedder
from .pipeline import Engine, new_session


def _load(config_path: str) -> Optional[EngineConfig]:
    try:
        return load_config(config_path)
    except ConfigError as exc:
        print("config validation failed:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  {violation}", file=sys.stderr)
        return None
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return None


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = _load(args.config)
    if config is None:
        return 2
    engine = Engine.build(config, cache_dir=args.cache_dir, trace_path=args.trace_out)
    app = create_app(engine, strict_sessions=args.strict_sessions, persist_dir=args.persist_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load(args.config)
    if config is None:
        return 2
    embedder = HashEmbedder(dim=config.llm.embedding_dim)
    any_sources = False
    for source in config.knowledge_sources:
        if source.kind != "vdb":
            continue
        any_sources = True
        store, stats = ingest_with_cache(source, embedder, args.cache_dir)
        status = "cache hit" if stats.cache_hit else f"ingested in {stats.elapsed_s:.2f}s"
        print(
            f"{source.id}: {stats.chunk_count} chunks, dim {stats.embedding_dim}, "
            f"{status}, digest {stats.digest[:16]}"
        )
    if not any_sources:
        print("no vdb sources in config; nothing to ingest")
    return 0


def cmd_chat(args: argparse.Namespace) -> int:
    config = _load(args.config)
    if config is None:
        return 2
    engine = Engine.build(config, cache_dir=args.cache_dir, trace_path=args.trace_out)
    session = new_session(args.session)
    print(f"session {session.session_id}; empty line or Ctrl-D exits")

    async def one_turn(text: str) -> None:
        async for event in engine.run_turn(session, text):
            kind = event["event"]
            if kind == "meta":
                print(f"[agents: {', '.join(event['data']['agents'])}]")
            elif kind == "token":
                print(event["data"]["text"], end="", flush=True)
            elif kind == "citations":
                print()
                for c in event["data"]["citations"]:
                    print(f"  [{c['display_index']}] {c['source_uri']}")
            elif kind == "error":
                print(f"\n[error] {event['data'].get('code')}: {event['data'].get('message')}")

    while True:
        try:
            text = input("> ").strip()
        except EOFError:
            break
        if not text:
            break
        asyncio.run(one_turn(text))
        print()
    return 0


def cmd_route(args: argparse.Namespace) -> int:
    config = _load(args.config)
    if config is None:
        return 2
    engine = Engine.build(config, cache_dir=args.cache_dir)
    debug = engine.route_debug(args.query)
    if args.json:
        print(json.dumps(debug, sort_keys=True))
        return 0
    if debug["scores"] is None:
        print("routing disabled; all agents activated")
    else:
        for agent_id, score in sorted(debug["scores"].items(), key=lambda kv: (-kv[1], kv[0])):
            marker = "*" if agent_id in debug["activated"] else " "
            print(f" {marker} {agent_id}: {score:.6f}")
    print("activated:", ", ".join(debug["activated"]))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .report import render_report

    try:
        outputs = render_report(args.trace, args.out_dir)
    except (OSError, ValueError) as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return 2
    for name, path in outputs.items():
        print(f"{name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragmux", description="multi-source QA engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the streaming HTTP service")
    p_serve.add_argument("--config", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--cache-dir", default=None)
    p_serve.add_argument("--persist-dir", default=None)
    p_serve.add_argument("--trace-out", default=None)
    p_serve.add_argument("--strict-sessions", action="store_true")
    p_serve.set_defaults(func=cmd_serve)

    p_ingest = sub.add_parser("ingest", help="build stores and the ingestion cache")
    p_ingest.add_argument("--config", required=True)
    p_ingest.add_argument("--cache-dir", default=".ragmux-cache")
    p_ingest.set_defaults(func=cmd_ingest)

    p_chat = sub.add_parser("chat", help="terminal REPL against the full pipeline")
    p_chat.add_argument("--config", required=True)
    p_chat.add_argument("--session", default=None)
    p_chat.add_argument("--cache-dir", default=None)
    p_chat.add_argument("--trace-out", default=None)
    p_chat.set_defaults(func=cmd_chat)

    p_route = sub.add_parser("route", help="print per-agent routing scores for a query")
    p_route.add_argument("--config", required=True)
    p_route.add_argument("--query", required=True)
    p_route.add_argument("--cache-dir", default=None)
    p_route.add_argument("--json", action="store_true")
    p_route.set_defaults(func=cmd_route)

    p_report = sub.add_parser("report", help="render figures + CSV from a trace log")
    p_report.add_argument("--trace", required=True, help="JSONL trace log")
    p_report.add_argument("--out-dir", required=True)
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
