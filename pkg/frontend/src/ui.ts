/** DOM rendering: message thread, citations, status, panels. */

import { ServiceClient, SourceInfo } from "./client.js";
import { ChatStore, UiMessage } from "./state.js";

export function renderMessages(container: HTMLElement, store: ChatStore): void {
  container.replaceChildren();
  for (const message of store.messages) {
    container.appendChild(renderBubble(container.ownerDocument, message));
  }
  for (const violation of store.violations) {
    const banner = container.ownerDocument.createElement("div");
    banner.className = "protocol-violation";
    banner.textContent = `protocol violation: ${violation}`;
    container.appendChild(banner);
  }
  if (store.streamDropped) {
    const banner = container.ownerDocument.createElement("div");
    banner.className = "stream-dropped";
    banner.textContent = "stream dropped — retry?";
    container.appendChild(banner);
  }
  container.scrollTop = container.scrollHeight;
}

function renderBubble(doc: Document, message: UiMessage): HTMLElement {
  const bubble = doc.createElement("div");
  bubble.className = `bubble bubble-${message.role}`;
  const text = doc.createElement("div");
  text.className = "bubble-text";
  text.textContent = message.text;
  bubble.appendChild(text);
  if (message.agents.length > 0) {
    const agents = doc.createElement("div");
    agents.className = "bubble-agents";
    agents.textContent = `agents: ${message.agents.join(", ")}`;
    bubble.appendChild(agents);
  }
  if (message.citations.length > 0) {
    const list = doc.createElement("ol");
    list.className = "citations";
    for (const citation of message.citations) {
      const item = doc.createElement("li");
      const link = doc.createElement("a");
      link.href = citation.source_uri;
      link.target = "_blank";
      link.rel = "noreferrer";
      link.textContent = `[${citation.display_index}] ${citation.source_uri}`;
      item.appendChild(link);
      list.appendChild(item);
    }
    bubble.appendChild(list);
  }
  return bubble;
}

export function renderStatus(element: HTMLElement, store: ChatStore): void {
  element.dataset.status = store.status;
  if (store.status === "streaming") {
    element.textContent = "answering…";
  } else if (store.status === "citing") {
    element.textContent = "collecting citations…";
  } else {
    element.textContent = "";
  }
}

export function renderSources(container: HTMLElement, sources: SourceInfo[]): void {
  container.replaceChildren();
  for (const source of sources) {
    const row = container.ownerDocument.createElement("div");
    row.className = "source-row";
    row.textContent = `${source.name} (${source.kind}) — ${source.chunks} chunks`;
    container.appendChild(row);
  }
}

export interface AppElements {
  thread: HTMLElement;
  status: HTMLElement;
  input: HTMLInputElement;
  send: HTMLButtonElement;
  sources: HTMLElement;
  sessions: HTMLSelectElement;
  newSession: HTMLButtonElement;
  offline: HTMLElement;
}

export function wireApp(client: ServiceClient, store: ChatStore, el: AppElements): void {
  store.subscribe(() => {
    renderMessages(el.thread, store);
    renderStatus(el.status, store);
    el.input.disabled = !store.inputEnabled;
    el.send.disabled = !store.inputEnabled;
  });

  async function send(): Promise<void> {
    const text = el.input.value.trim();
    if (!text || !store.inputEnabled) {
      return;
    }
    el.input.value = "";
    store.beginTurn(text);
    try {
      for await (const event of client.streamChat(text, store.sessionId ?? undefined)) {
        store.applyEvent(event);
      }
      store.endStream();
    } catch (err) {
      store.failStream(err instanceof Error ? err.message : String(err));
    }
    void refreshSessions();
  }

  el.send.addEventListener("click", () => void send());
  el.input.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") {
      void send();
    }
  });

  el.newSession.addEventListener("click", () => {
    store.sessionId = null;
    store.loadTranscript("", []);
    el.sessions.value = "";
  });

  el.sessions.addEventListener("change", () => {
    const sid = el.sessions.value;
    if (!sid) {
      return;
    }
    void client.transcript(sid).then((messages) => store.loadTranscript(sid, messages));
  });

  async function refreshSessions(): Promise<void> {
    try {
      const sessions = await client.sessions();
      const current = store.sessionId ?? "";
      el.sessions.replaceChildren();
      const blank = el.sessions.ownerDocument.createElement("option");
      blank.value = "";
      blank.textContent = "(new session)";
      el.sessions.appendChild(blank);
      for (const session of sessions) {
        const option = el.sessions.ownerDocument.createElement("option");
        option.value = session.session_id;
        option.textContent = `${session.session_id} (${session.messages})`;
        el.sessions.appendChild(option);
      }
      el.sessions.value = current;
    } catch {
      // panel refresh is best-effort
    }
  }

  async function boot(): Promise<void> {
    const alive = await client.health();
    el.offline.style.display = alive ? "none" : "block";
    if (!alive) {
      return;
    }
    try {
      renderSources(el.sources, await client.sources());
    } catch {
      // sources panel is optional
    }
    await refreshSessions();
  }

  void boot();
}
