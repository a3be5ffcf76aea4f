import { ServiceClient } from "./client.js";
import { ChatStore } from "./state.js";
import { AppElements, wireApp } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "http://127.0.0.1:8000";

const el: AppElements = {
  thread: document.getElementById("thread") as HTMLElement,
  status: document.getElementById("status") as HTMLElement,
  input: document.getElementById("input") as HTMLInputElement,
  send: document.getElementById("send") as HTMLButtonElement,
  sources: document.getElementById("sources") as HTMLElement,
  sessions: document.getElementById("sessions") as HTMLSelectElement,
  newSession: document.getElementById("new-session") as HTMLButtonElement,
  offline: document.getElementById("offline") as HTMLElement,
};

wireApp(new ServiceClient(baseUrl), new ChatStore(), el);
