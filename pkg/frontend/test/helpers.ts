/** Scripted mock service: serves a fixed frame script over fetch. */

import { ServerEvent } from "../src/protocol.js";

export function frame(event: string, data: unknown): string {
  return `event: ${event}\ndata: ${JSON.stringify(data)}\n\n`;
}

export function normalTurnFrames(tokens: string[]): string[] {
  return [
    frame("meta", { session_id: "s1", turn_id: "s1:1", agents: ["a", "b"] }),
    ...tokens.map((t) => frame("token", { text: t })),
    frame("citations", {
      citations: [
        { display_index: 1, source_uri: "https://x.test/doc", source_name: "docs", chunk_ids: ["c1"] },
      ],
    }),
    frame("done", { trace: null }),
  ];
}

/** Streams the given text chunks as one fetch response body. */
export function mockFetchStreaming(chunks: string[], status = 200): typeof fetch {
  return async () => {
    const encoder = new TextEncoder();
    const body = new ReadableStream<Uint8Array>({
      start(controller) {
        for (const chunk of chunks) {
          controller.enqueue(encoder.encode(chunk));
        }
        controller.close();
      },
    });
    return new Response(body, { status });
  };
}

export function mockFetchJson(routes: Record<string, unknown>): typeof fetch {
  return async (input: RequestInfo | URL) => {
    const url = String(input);
    for (const [suffix, payload] of Object.entries(routes)) {
      if (url.endsWith(suffix)) {
        return new Response(JSON.stringify(payload), {
          status: 200,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response("{}", { status: 404 });
  };
}

export async function collect(gen: AsyncGenerator<ServerEvent>): Promise<ServerEvent[]> {
  const out: ServerEvent[] = [];
  for await (const event of gen) {
    out.push(event);
  }
  return out;
}
