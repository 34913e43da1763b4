/** Thin DOM layer: paints the ConsoleModel into the page's panels. */

import { ConsoleModel } from "./model.js";

export interface Panels {
  chat: HTMLElement;
  trace: HTMLElement;
  state: HTMLElement;
  nbest: HTMLElement;
  other: HTMLElement;
  banner: HTMLElement;
  filter: HTMLSelectElement;
}

function el(tag: string, cls: string, text: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  node.textContent = text;
  return node;
}

export function renderChat(model: ConsoleModel, pane: HTMLElement): void {
  pane.replaceChildren(
    ...model.chat.map((row) => el("div", `turn ${row.who}`,
      `${row.who === "user" ? "you" : "system"}: ${row.text}`)),
  );
  pane.scrollTop = pane.scrollHeight;
}

export function renderTrace(model: ConsoleModel, pane: HTMLElement): void {
  pane.replaceChildren(
    ...model.visibleTrace().map((row) => el(
      "div",
      `trace-row ${row.disposition}`,
      `#${row.seq} t${row.tick} ${row.sender} -> ${row.receiver} ` +
      `[${row.performative}${row.contentType ? " : " + row.contentType : ""}] ` +
      row.content,
    )),
  );
  pane.scrollTop = pane.scrollHeight;
}

export function renderState(model: ConsoleModel, pane: HTMLElement): void {
  if (!model.state) {
    pane.replaceChildren(el("div", "empty", "no state yet"));
    return;
  }
  const s = model.state;
  const rows = [
    el("div", "stat", `QUD depth ${model.qudDepth()}, ` +
      `common ground ${model.commonGroundSize()}`),
    el("div", "qud", `qud: ${s.qud.join(" | ") || "(empty)"}`),
    el("div", "cg", `ground: ${s.common_ground.join(" | ") || "(empty)"}`),
    el("div", "lm", s.last_move
      ? `last move: ${s.last_move.speaker} ${s.last_move.act}`
      : "last move: (none)"),
    el("div", "agenda", `agenda: ${s.agenda.join(" | ") || "(empty)"}`),
  ];
  pane.replaceChildren(...rows);
}

export function renderNBest(model: ConsoleModel, pane: HTMLElement): void {
  if (!model.nbest) {
    pane.replaceChildren(el("div", "empty", "no hypotheses yet"));
    return;
  }
  const rows = model.nbest.hypotheses.map((h) => el(
    "div", "hyp",
    `${h.score.toFixed(4)} ${h.module.padStart(7)} ` +
    `${h.span_coverage !== undefined ? `cov ${h.span_coverage.toFixed(2)} ` : ""}` +
    h.act,
  ));
  pane.replaceChildren(
    el("div", "utt", `"${model.nbest.utterance}"`),
    ...rows,
  );
}

export function renderOther(model: ConsoleModel, pane: HTMLElement): void {
  pane.replaceChildren(
    ...model.other.map((row) => el("div", `other ${row.kind}`,
      `${row.kind}: ${row.text}`)),
  );
}

export function renderFilter(model: ConsoleModel, select: HTMLSelectElement): void {
  const current = model.performativeFilter ?? "";
  const options = ["", ...model.performatives()];
  select.replaceChildren(
    ...options.map((p) => {
      const o = document.createElement("option");
      o.value = p;
      o.textContent = p === "" ? "all performatives" : p;
      return o;
    }),
  );
  select.value = current;
}

export function renderAll(model: ConsoleModel, panels: Panels): void {
  renderChat(model, panels.chat);
  renderTrace(model, panels.trace);
  renderState(model, panels.state);
  renderNBest(model, panels.nbest);
  renderOther(model, panels.other);
  renderFilter(model, panels.filter);
}
