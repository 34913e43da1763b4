/** Page wiring: connect to the bridge, fold events, repaint. */

import { BridgeClient } from "./client.js";
import { ConsoleModel } from "./model.js";
import { Panels, renderAll } from "./render.js";

function grab(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

export function start(): void {
  const panels: Panels = {
    chat: grab("chat"),
    trace: grab("trace"),
    state: grab("state"),
    nbest: grab("nbest"),
    other: grab("other"),
    banner: grab("banner"),
    filter: grab("filter") as HTMLSelectElement,
  };
  const model = new ConsoleModel();
  const params = new URLSearchParams(window.location.search);
  const url = params.get("bridge")
    ?? `ws://${window.location.hostname || "127.0.0.1"}:${params.get("port") ?? "8765"}/bridge`;

  const client = new BridgeClient(
    url,
    {
      onEvent: (raw) => {
        model.apply(raw);
        renderAll(model, panels);
      },
      onStatus: (status, detail) => {
        panels.banner.textContent =
          status === "open" ? "" : `${status}${detail ? " (" + detail + ")" : ""}`;
        panels.banner.className = status === "open" ? "banner hidden" : "banner";
      },
    },
    (u) => new WebSocket(u) as never,
  );
  client.connect();

  const input = grab("utterance") as HTMLInputElement;
  grab("send").addEventListener("click", () => {
    if (input.value.trim()) {
      client.sendUtterance(input.value.trim());
      input.value = "";
    }
  });
  input.addEventListener("keydown", (ev) => {
    if ((ev as KeyboardEvent).key === "Enter") {
      grab("send").click();
    }
  });
  panels.filter.addEventListener("change", () => {
    model.performativeFilter = panels.filter.value || null;
    renderAll(model, panels);
  });
}

start();
