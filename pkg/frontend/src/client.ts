/** Thin typed client over the service's HTTP endpoints. */

import { ServerEvent, streamChatEvents } from "./protocol.js";

export interface SourceInfo {
  name: string;
  kind: string;
  chunks: number;
}

export interface SessionInfo {
  session_id: string;
  messages: number;
}

export interface TranscriptMessage {
  index: number;
  role: string;
  content: string;
  timestamp_ms: number;
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  async health(): Promise<boolean> {
    try {
      const resp = await this.fetchImpl(`${this.baseUrl}/v1/health`);
      return resp.ok;
    } catch {
      return false;
    }
  }

  async sources(): Promise<SourceInfo[]> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/sources`);
    if (!resp.ok) {
      throw new Error(`sources: HTTP ${resp.status}`);
    }
    return (await resp.json()).sources as SourceInfo[];
  }

  async sessions(): Promise<SessionInfo[]> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/sessions`);
    if (!resp.ok) {
      throw new Error(`sessions: HTTP ${resp.status}`);
    }
    return (await resp.json()).sessions as SessionInfo[];
  }

  async transcript(sessionId: string): Promise<TranscriptMessage[]> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/sessions/${sessionId}`);
    if (!resp.ok) {
      throw new Error(`transcript: HTTP ${resp.status}`);
    }
    return (await resp.json()).messages as TranscriptMessage[];
  }

  streamChat(message: string, sessionId?: string): AsyncGenerator<ServerEvent> {
    return streamChatEvents(this.baseUrl, message, sessionId, this.fetchImpl);
  }
}
