import { describe, expect, it } from "vitest";

import { SseParser } from "../src/protocol.js";
import { ChatStore } from "../src/state.js";
import { renderMessages, renderSources, renderStatus } from "../src/ui.js";
import { frame, normalTurnFrames } from "./helpers.js";

function playedStore(frames: string[]): ChatStore {
  const store = new ChatStore();
  store.beginTurn("the question");
  const parser = new SseParser();
  for (const chunk of frames) {
    for (const event of parser.feed(chunk)) {
      store.applyEvent(event);
    }
  }
  store.endStream();
  return store;
}

describe("renderMessages", () => {
  it("renders the final text exactly as received", () => {
    const tokens = ["Use ", "msghub."];
    const store = playedStore(normalTurnFrames(tokens));
    const container = document.createElement("div");
    document.body.appendChild(container);
    renderMessages(container, store);
    const bubble = container.querySelector(".bubble-assistant .bubble-text");
    expect(bubble?.textContent).toBe(tokens.join(""));
  });

  it("renders numbered citation links under the bubble", () => {
    const store = playedStore(normalTurnFrames(["x"]));
    const container = document.createElement("div");
    renderMessages(container, store);
    const links = [...container.querySelectorAll(".citations a")];
    expect(links).toHaveLength(1);
    expect(links[0].textContent).toContain("[1]");
    expect((links[0] as HTMLAnchorElement).href).toContain("https://x.test/doc");
  });

  it("renders protocol violations visibly", () => {
    const store = playedStore([
      ...normalTurnFrames(["x"]),
      frame("token", { text: "late" }),
    ]);
    const container = document.createElement("div");
    renderMessages(container, store);
    const banner = container.querySelector(".protocol-violation");
    expect(banner?.textContent).toContain("after done");
  });

  it("renders error bubbles inline", () => {
    const store = playedStore([
      frame("meta", { agents: [] }),
      frame("error", { code: "TurnFailed", message: "backend down" }),
      frame("done", { trace: null }),
    ]);
    const container = document.createElement("div");
    renderMessages(container, store);
    expect(container.querySelector(".bubble-error")?.textContent).toContain("backend down");
  });
});

describe("renderStatus", () => {
  it("shows the citing indicator during the look-back pause", () => {
    const store = new ChatStore();
    store.beginTurn("q");
    const el = document.createElement("div");
    renderStatus(el, store);
    expect(el.textContent).toContain("answering");
    const parser = new SseParser();
    for (const chunk of normalTurnFrames(["x"]).slice(0, -1)) {
      for (const event of parser.feed(chunk)) {
        store.applyEvent(event);
      }
    }
    renderStatus(el, store);
    expect(el.textContent).toContain("citations");
  });
});

describe("renderSources", () => {
  it("shows names with chunk counts", () => {
    const container = document.createElement("div");
    renderSources(container, [
      { name: "tutorial", kind: "vdb", chunks: 13 },
      { name: "web", kind: "search_engine", chunks: 0 },
    ]);
    const rows = [...container.querySelectorAll(".source-row")];
    expect(rows.map((r) => r.textContent)).toEqual([
      "tutorial (vdb) — 13 chunks",
      "web (search_engine) — 0 chunks",
    ]);
  });
});
