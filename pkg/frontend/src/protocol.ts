/**
 * Wire protocol: the service streams server-sent-events-style frames over
 * a POST response body. Each frame is `event: <kind>` + `data: <json>`
 * separated by a blank line; kinds are meta | token | citations | error |
 * done. A well-formed stream is: meta token* (citations | error) done,
 * with error allowed to pre-empt meta for rejected requests.
 */

export type EventKind = "meta" | "token" | "citations" | "error" | "done";

export interface CitationPayload {
  display_index: number;
  source_uri: string;
  source_name: string;
  chunk_ids: string[];
}

export interface ServerEvent {
  event: EventKind;
  data: {
    session_id?: string;
    turn_id?: string;
    agents?: string[];
    text?: string;
    citations?: CitationPayload[];
    code?: string;
    message?: string;
    partial_text?: string;
    trace?: Record<string, unknown> | null;
  };
}

const KNOWN_KINDS = new Set(["meta", "token", "citations", "error", "done"]);

/** Incremental SSE frame parser; frames may be split across chunks. */
export class SseParser {
  private buffer = "";

  feed(chunk: string): ServerEvent[] {
    this.buffer += chunk;
    const events: ServerEvent[] = [];
    let boundary: number;
    while ((boundary = this.buffer.indexOf("\n\n")) !== -1) {
      const block = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const parsed = parseBlock(block);
      if (parsed !== null) {
        events.push(parsed);
      }
    }
    return events;
  }

  /** Anything left after the stream closed (should be empty). */
  residue(): string {
    return this.buffer.trim();
  }
}

function parseBlock(block: string): ServerEvent | null {
  let kind: string | null = null;
  const dataLines: string[] = [];
  for (const line of block.split("\n")) {
    if (line.startsWith("event:")) {
      kind = line.slice("event:".length).trim();
    } else if (line.startsWith("data:")) {
      dataLines.push(line.slice("data:".length).trim());
    }
  }
  if (kind === null) {
    return null;
  }
  let data: ServerEvent["data"] = {};
  if (dataLines.length > 0) {
    try {
      data = JSON.parse(dataLines.join("\n"));
    } catch {
      data = { message: dataLines.join("\n") };
    }
  }
  return { event: kind as EventKind, data };
}

/**
 * Tracks protocol order across one stream and reports violations. The UI
 * surfaces every violation visibly instead of silently ignoring it.
 */
export class GrammarChecker {
  private sawMeta = false;
  private sawTerminal = false; // citations or error
  private sawDone = false;
  readonly violations: string[] = [];

  observe(event: ServerEvent): void {
    if (!KNOWN_KINDS.has(event.event)) {
      this.violations.push(`unknown event kind: ${event.event}`);
      return;
    }
    if (this.sawDone) {
      this.violations.push(`event after done: ${event.event}`);
      return;
    }
    switch (event.event) {
      case "meta":
        if (this.sawMeta) {
          this.violations.push("more than one meta event");
        }
        this.sawMeta = true;
        break;
      case "token":
        if (!this.sawMeta) {
          this.violations.push("token before meta");
        }
        if (this.sawTerminal) {
          this.violations.push("token after citations");
        }
        break;
      case "citations":
        if (this.sawTerminal) {
          this.violations.push("more than one citations event");
        }
        this.sawTerminal = true;
        break;
      case "error":
        this.sawTerminal = true;
        break;
      case "done":
        this.sawDone = true;
        break;
    }
  }

  finish(): void {
    if (!this.sawDone) {
      this.violations.push("stream ended without done");
    }
  }
}

/**
 * POST the chat request and yield parsed events as they arrive on the
 * response body stream.
 */
export async function* streamChatEvents(
  baseUrl: string,
  message: string,
  sessionId?: string,
  fetchImpl: typeof fetch = fetch,
): AsyncGenerator<ServerEvent> {
  const body: Record<string, string> = { message };
  if (sessionId) {
    body.session_id = sessionId;
  }
  const response = await fetchImpl(`${baseUrl}/v1/chat`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!response.ok || response.body === null) {
    throw new Error(`chat request failed: HTTP ${response.status}`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  const parser = new SseParser();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) {
      break;
    }
    for (const event of parser.feed(decoder.decode(value, { stream: true }))) {
      yield event;
    }
  }
  for (const event of parser.feed(decoder.decode())) {
    yield event;
  }
}
