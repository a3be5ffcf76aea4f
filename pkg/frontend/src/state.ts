/**
 * Chat state machine. One in-flight stream per store:
 *
 *   idle -> streaming (request sent) -> citing (citations arrived)
 *        -> idle (done event)
 *
 * Input stays disabled while the status is not idle. Assistant bubble text
 * only ever grows during a stream, and the rendered final text is exactly
 * the concatenation of the received token events.
 */

import { CitationPayload, GrammarChecker, ServerEvent } from "./protocol.js";

export type ChatStatus = "idle" | "streaming" | "citing";

export interface UiMessage {
  role: "user" | "assistant" | "error";
  text: string;
  citations: CitationPayload[];
  agents: string[];
}

export interface StoreListener {
  (store: ChatStore): void;
}

export class ChatStore {
  status: ChatStatus = "idle";
  messages: UiMessage[] = [];
  violations: string[] = [];
  sessionId: string | null = null;
  streamDropped = false;
  private grammar = new GrammarChecker();
  private listeners: StoreListener[] = [];

  subscribe(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this);
    }
  }

  get inputEnabled(): boolean {
    return this.status === "idle";
  }

  private activeAssistant(): UiMessage {
    const last = this.messages[this.messages.length - 1];
    if (last !== undefined && last.role === "assistant") {
      return last;
    }
    const bubble: UiMessage = { role: "assistant", text: "", citations: [], agents: [] };
    this.messages.push(bubble);
    return bubble;
  }

  beginTurn(userText: string): void {
    if (this.status !== "idle") {
      throw new Error("a stream is already in flight");
    }
    this.status = "streaming";
    this.streamDropped = false;
    this.grammar = new GrammarChecker();
    this.messages.push({ role: "user", text: userText, citations: [], agents: [] });
    this.notify();
  }

  applyEvent(event: ServerEvent): void {
    this.grammar.observe(event);
    this.syncViolations();
    switch (event.event) {
      case "meta": {
        const bubble = this.activeAssistant();
        bubble.agents = event.data.agents ?? [];
        if (event.data.session_id) {
          this.sessionId = event.data.session_id;
        }
        break;
      }
      case "token": {
        const bubble = this.activeAssistant();
        bubble.text += event.data.text ?? ""; // append-only: never shrinks
        break;
      }
      case "citations": {
        const bubble = this.activeAssistant();
        bubble.citations = event.data.citations ?? [];
        this.status = "citing";
        break;
      }
      case "error": {
        this.messages.push({
          role: "error",
          text: formatError(event),
          citations: [],
          agents: [],
        });
        break;
      }
      case "done": {
        this.status = "idle";
        break;
      }
    }
    this.notify();
  }

  /** Stream closed. Flags a violation when no done event was seen. */
  endStream(): void {
    this.grammar.finish();
    this.syncViolations();
    if (this.status !== "idle") {
      this.streamDropped = true;
      this.status = "idle";
    }
    this.notify();
  }

  /** Transport-level failure before or during the stream. */
  failStream(reason: string): void {
    this.messages.push({ role: "error", text: reason, citations: [], agents: [] });
    this.streamDropped = true;
    this.status = "idle";
    this.notify();
  }

  loadTranscript(sessionId: string, records: Array<{ role: string; content: string }>): void {
    this.sessionId = sessionId;
    this.messages = records
      .filter((r) => r.role === "user" || r.role === "assistant")
      .map((r) => ({
        role: r.role as "user" | "assistant",
        text: r.content,
        citations: [],
        agents: [],
      }));
    this.status = "idle";
    this.violations = [];
    this.notify();
  }

  private syncViolations(): void {
    for (const violation of this.grammar.violations) {
      if (!this.violations.includes(violation)) {
        this.violations.push(violation);
      }
    }
  }
}

function formatError(event: ServerEvent): string {
  const code = event.data.code ?? "Error";
  const message = event.data.message ?? "";
  const partial = event.data.partial_text ? ` (partial answer: "${event.data.partial_text}")` : "";
  return `${code}: ${message}${partial}`;
}
