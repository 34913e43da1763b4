/**
 * Console view-model: a pure fold over bridge events.
 *
 * The model is append-only with respect to agency state; rows appear in
 * bridge arrival order (which matches trace seq order). Rendering is a
 * separate, thin DOM layer so everything here is testable without a
 * browser.
 */

import {
  BridgeEvent,
  NBestEvent,
  ParsedEvent,
  StateEvent,
  parseEvent,
  summarizeWire,
  utteranceText,
} from "./protocol.js";

export interface ChatRow {
  who: "user" | "system";
  text: string;
}

export interface TraceRow {
  seq: number;
  tick: number;
  disposition: string;
  performative: string;
  sender: string;
  receiver: string;
  contentType: string | null;
  content: string;
}

export interface OtherRow {
  kind: "unknown" | "malformed";
  text: string;
}

export class ConsoleModel {
  chat: ChatRow[] = [];
  trace: TraceRow[] = [];
  state: StateEvent | null = null;
  nbest: NBestEvent | null = null;
  other: OtherRow[] = [];
  performativeFilter: string | null = null;

  /** Apply one raw event line; never throws, never drops silently. */
  apply(raw: string): ParsedEvent {
    const parsed = parseEvent(raw);
    switch (parsed.kind) {
      case "event":
        this.applyEvent(parsed.event);
        break;
      case "unknown":
        this.other.push({ kind: "unknown", text: JSON.stringify(parsed.raw) });
        break;
      case "malformed":
        this.other.push({
          kind: "malformed",
          text: `${parsed.reason}: ${parsed.raw}`,
        });
        break;
    }
    return parsed;
  }

  private applyEvent(event: BridgeEvent): void {
    switch (event.type) {
      case "trace": {
        const wire = summarizeWire(event.message);
        this.trace.push({
          seq: event.seq,
          tick: event.tick,
          disposition: event.disposition,
          performative: wire.performative,
          sender: wire.sender,
          receiver: wire.receiver,
          contentType: wire.contentType,
          content: wire.content,
        });
        const text = utteranceText(event.message);
        if (text !== null && wire.sender === "user") {
          // the router forwards the same utterance with the sender kept, so
          // one spoken turn shows up on several trace hops; show it once
          const last = this.chat[this.chat.length - 1];
          if (!(last && last.who === "user" && last.text === text)) {
            this.chat.push({ who: "user", text });
          }
        }
        break;
      }
      case "state":
        this.state = event;
        break;
      case "nbest":
        this.nbest = event;
        break;
      case "system_move":
        this.chat.push({ who: "system", text: event.act });
        break;
    }
  }

  /** Trace rows visible under the current performative filter. */
  visibleTrace(): TraceRow[] {
    if (this.performativeFilter === null) {
      return this.trace;
    }
    return this.trace.filter((r) => r.performative === this.performativeFilter);
  }

  performatives(): string[] {
    return [...new Set(this.trace.map((r) => r.performative))].sort();
  }

  qudDepth(): number {
    return this.state ? this.state.qud.length : 0;
  }

  commonGroundSize(): number {
    return this.state ? this.state.common_ground.length : 0;
  }
}
